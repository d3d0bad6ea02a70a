#include "sparsecal/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "sparsecal/error.hpp"
#include "sparsecal/optimizers.hpp"

namespace sparsecal {

TimeSeries TimeSeries::uniform(std::vector<double> values, double dt, double t0) {
  require(dt > 0.0, "sampling interval must be > 0");
  TimeSeries s;
  s.dt = dt;
  s.t.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) s.t[i] = t0 + dt * static_cast<double>(i);
  s.v = std::move(values);
  return s;
}

void TimeSeries::validate() const {
  require(dt > 0.0, "sampling interval must be > 0");
  require(t.size() == v.size(), "timestamps and values must align");
  require(sigma.empty() || sigma.size() == v.size(), "sigma must be empty or aligned");
  require(edge.empty() || edge.size() == v.size(), "edge flags must be empty or aligned");
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double step = t[i] - t[i - 1];
    require(step > 0.0, "timestamps must increase");
    require(std::abs(step - dt) <= 1e-9 * std::max(dt, std::abs(t[i])),
            "timestamps must be uniformly spaced");
  }
}

std::vector<AllanPoint> allan_deviation(const TimeSeries& s, const std::vector<double>& taus) {
  const auto n = static_cast<std::int64_t>(s.size());
  // Offsetting by the first sample keeps a constant series exactly zero.
  const double ref = s.v.empty() ? 0.0 : s.v.front();
  std::vector<double> prefix(s.size() + 1, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) prefix[i + 1] = prefix[i] + (s.v[i] - ref);
  std::vector<AllanPoint> out;
  for (double tau : taus) {
    const auto m = static_cast<std::int64_t>(std::llround(tau / s.dt));
    if (m < 1) fail(Errc::insufficient_data, "Allan tau shorter than one sample");
    if (n < 3 * m) fail(Errc::insufficient_data, "Allan tau needs three non-overlapping spans");
    const std::int64_t terms = n - 2 * m;
    const double inv_m = 1.0 / static_cast<double>(m);
    double sum = 0.0;
    for (std::int64_t i = 0; i < terms; ++i) {
      const double a = (prefix[i + m] - prefix[i]) * inv_m;
      const double b = (prefix[i + 2 * m] - prefix[i + m]) * inv_m;
      sum += (b - a) * (b - a);
    }
    const double avar = sum / (2.0 * static_cast<double>(terms));
    out.push_back({static_cast<double>(m) * s.dt, std::sqrt(avar), m});
  }
  return out;
}

std::vector<double> log_taus(const TimeSeries& s, int per_decade) {
  require(per_decade >= 1, "need at least one tau per decade");
  const auto max_m = static_cast<std::int64_t>(s.size()) / 3;
  std::vector<double> taus;
  std::int64_t last = 0;
  for (int k = 0;; ++k) {
    const auto m = static_cast<std::int64_t>(std::llround(std::pow(10.0, static_cast<double>(k) / per_decade)));
    if (m > max_m) break;
    if (m != last) taus.push_back(static_cast<double>(m) * s.dt);
    last = m;
  }
  return taus;
}

double lorentzian_avar(double tau, double q, double tau_c) {
  require(tau > 0.0 && tau_c > 0.0, "tau and tau_c must be > 0");
  const double r = tau / tau_c;
  // Small-r series keeps precision where the bracket cancels.
  if (r < 1e-4) return q * r / 3.0 * (1.0 - r / 4.0);
  const double bracket = 1.0 - (3.0 - 4.0 * std::exp(-r) + std::exp(-2.0 * r)) / (2.0 * r);
  return q * bracket / r;
}

double AllanFit::avar(double tau) const {
  double v = white * white / tau + flicker * flicker;
  if (lorentz_q > 0.0 && tau_c > 0.0) v += lorentzian_avar(tau, lorentz_q, tau_c);
  return v;
}

double AllanFit::adev(double tau) const { return std::sqrt(avar(tau)); }

namespace {

struct FitData {
  std::vector<double> tau;
  std::vector<double> y;  // Allan variance
  std::vector<double> w;  // decade weights
};

double log_objective(const FitData& d, double c_white, double c_flicker, double q, double tau_c) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.tau.size(); ++i) {
    double model = c_white / d.tau[i] + c_flicker;
    if (q > 0.0) model += lorentzian_avar(d.tau[i], q, tau_c);
    if (!(model > 0.0)) return std::numeric_limits<double>::infinity();
    const double r = std::log(model) - std::log(d.y[i]);
    s += d.w[i] * r * r;
  }
  return s;
}

// Solves the weighted normal equations on the columns in `mask`; returns
// false when the system is singular.
bool solve_subset(const FitData& d, const std::vector<std::array<double, 3>>& basis, int mask,
                  std::array<double, 3>& coef) {
  std::array<int, 3> idx{};
  int k = 0;
  for (int j = 0; j < 3; ++j) {
    if (mask & (1 << j)) idx[k++] = j;
  }
  std::array<std::array<double, 4>, 3> a{};
  for (std::size_t i = 0; i < d.tau.size(); ++i) {
    const double wi = d.w[i] / (d.y[i] * d.y[i]);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) a[r][c] += wi * basis[i][idx[r]] * basis[i][idx[c]];
      a[r][3] += wi * basis[i][idx[r]] * d.y[i];
    }
  }
  // Gaussian elimination with partial pivoting.
  for (int c = 0; c < k; ++c) {
    int piv = c;
    for (int r = c + 1; r < k; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (!(std::abs(a[piv][c]) > 1e-300)) return false;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < k; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int cc = c; cc < 4; ++cc) a[r][cc] -= f * a[c][cc];
    }
  }
  coef = {0.0, 0.0, 0.0};
  for (int r = 0; r < k; ++r) coef[idx[r]] = a[r][3] / a[r][r];
  return true;
}

}  // namespace

AllanFit fit_allan_models(const std::vector<AllanPoint>& curve) {
  AllanFit fit;
  if (curve.size() < 6) fail(Errc::insufficient_data, "Allan fit needs at least six tau points");
  FitData d;
  for (const auto& p : curve) {
    require(p.tau > 0.0 && std::isfinite(p.adev) && p.adev >= 0.0, "invalid Allan point");
    if (p.adev > 0.0) {
      d.tau.push_back(p.tau);
      d.y.push_back(p.adev * p.adev);
    }
  }
  if (d.tau.size() < 6) {
    fit.degenerate = true;
    return fit;
  }
  // Equal weight per decade: each point carries half the log distance to
  // its neighbours.
  const std::size_t n = d.tau.size();
  d.w.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::log10(d.tau[i == 0 ? 0 : i - 1]);
    const double hi = std::log10(d.tau[i + 1 == n ? n - 1 : i + 1]);
    d.w[i] = 0.5 * (hi - lo);
  }
  if (!(std::accumulate(d.w.begin(), d.w.end(), 0.0) > 0.0)) d.w.assign(n, 1.0);

  const double t_min = d.tau.front(), t_max = d.tau.back();
  double best = std::numeric_limits<double>::infinity();
  std::array<double, 3> best_coef{};
  double best_tc = t_min;
  const int grid = 40;
  for (int g = 0; g <= grid; ++g) {
    const double tc = t_min * std::pow(t_max / t_min, static_cast<double>(g) / grid);
    std::vector<std::array<double, 3>> basis(n);
    for (std::size_t i = 0; i < n; ++i) basis[i] = {1.0 / d.tau[i], 1.0, lorentzian_avar(d.tau[i], 1.0, tc)};
    for (int mask = 1; mask < 8; ++mask) {
      std::array<double, 3> c{};
      if (!solve_subset(d, basis, mask, c)) continue;
      if (c[0] < 0.0 || c[1] < 0.0 || c[2] < 0.0) continue;
      const double obj = log_objective(d, c[0], c[1], c[2], tc);
      if (obj < best) {
        best = obj;
        best_coef = c;
        best_tc = tc;
      }
    }
  }
  if (!std::isfinite(best)) fail(Errc::fit_failure, "Allan fit: no non-negative solution");

  // Refine the active components in log space.
  std::vector<int> active;
  for (int j = 0; j < 3; ++j) {
    if (best_coef[j] > 0.0) active.push_back(j);
  }
  const bool with_tc = best_coef[2] > 0.0;
  std::vector<double> x0;
  for (int j : active) x0.push_back(std::log(best_coef[j]));
  if (with_tc) x0.push_back(std::log(best_tc));
  auto unpack = [&](const std::vector<double>& x, std::array<double, 3>& c, double& tc) {
    c = {0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < active.size(); ++k) c[active[k]] = std::exp(x[k]);
    tc = with_tc ? std::exp(x.back()) : best_tc;
  };
  auto objective = [&](const std::vector<double>& x) {
    std::array<double, 3> c{};
    double tc = 0.0;
    unpack(x, c, tc);
    return log_objective(d, c[0], c[1], c[2], tc);
  };
  NelderMeadOptions nm;
  nm.scale.assign(x0.size(), 0.3);
  nm.x_tol = 1e-6;
  nm.f_tol_rel = 1e-10;
  nm.max_iter = 2000;
  const auto res = nelder_mead(objective, x0, nm);
  std::array<double, 3> c{};
  double tc = best_tc;
  if (res.value <= best) {
    unpack(res.x, c, tc);
    best = res.value;
  } else {
    c = best_coef;
  }
  if (!std::isfinite(best)) fail(Errc::fit_failure, "Allan fit did not converge");
  fit.white = std::sqrt(c[0]);
  fit.flicker = std::sqrt(c[1]);
  fit.lorentz_q = c[2];
  fit.tau_c = c[2] > 0.0 ? tc : 0.0;
  fit.residual = std::sqrt(best / std::accumulate(d.w.begin(), d.w.end(), 0.0));
  return fit;
}

std::vector<AllanPoint> subtract_white(const std::vector<AllanPoint>& curve, const AllanFit& fit) {
  std::vector<AllanPoint> out = curve;
  for (auto& p : out) {
    p.adev = std::sqrt(std::max(0.0, p.adev * p.adev - fit.white * fit.white / p.tau));
  }
  return out;
}

TimeSeries rolling_average(const TimeSeries& s, std::int64_t window) {
  const auto n = static_cast<std::int64_t>(s.size());
  require(window >= 1 && window <= std::max<std::int64_t>(n, 1), "window must lie in [1, N]");
  TimeSeries out = s;
  out.sigma.clear();
  out.edge.assign(s.size(), false);
  if (window == 1) {
    if (!s.edge.empty()) out.edge = s.edge;
    return out;
  }
  std::vector<double> prefix(s.size() + 1, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) prefix[i + 1] = prefix[i] + s.v[i];
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t centred = i - window / 2;
    const std::int64_t start = std::clamp<std::int64_t>(centred, 0, n - window);
    out.v[i] = (prefix[start + window] - prefix[start]) / static_cast<double>(window);
    out.edge[i] = start != centred || (!s.edge.empty() && s.edge[i]);
  }
  return out;
}

TimeSeries downsample(const TimeSeries& s, std::int64_t factor) {
  require(factor >= 1, "downsample factor must be >= 1");
  TimeSeries out;
  out.dt = s.dt * static_cast<double>(factor);
  for (std::size_t i = 0; i < s.size(); i += static_cast<std::size_t>(factor)) {
    out.t.push_back(s.t[i]);
    out.v.push_back(s.v[i]);
    if (!s.sigma.empty()) out.sigma.push_back(s.sigma[i]);
    if (!s.edge.empty()) out.edge.push_back(s.edge[i]);
  }
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "series must have equal length");
  if (x.size() < 3) fail(Errc::insufficient_data, "correlation needs at least three points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  // Relative threshold: a constant series leaves only rounding residue.
  auto flat = [n](double ss, double m) { return !(ss > 1e-24 * n * std::max(1.0, m * m)); };
  if (flat(sxx, mx) || flat(syy, my)) fail(Errc::zero_variance, "correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double correlation(const TimeSeries& x, const TimeSeries& y, std::int64_t window) {
  require(x.size() == y.size(), "series must have equal length");
  const TimeSeries sx = rolling_average(x, window);
  const TimeSeries sy = rolling_average(y, window);
  std::vector<double> a, b;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    if (sx.edge[i] || sy.edge[i]) continue;
    a.push_back(sx.v[i]);
    b.push_back(sy.v[i]);
  }
  return pearson(a, b);
}

std::vector<DeltaCorrelationPoint> delta_correlation(const TimeSeries& eps_a,
                                                     const TimeSeries& eps_b,
                                                     const TimeSeries& channel,
                                                     const std::vector<double>& taus) {
  require(eps_a.size() == eps_b.size() && eps_a.size() == channel.size(),
          "campaign series must be aligned");
  std::vector<DeltaCorrelationPoint> out;
  for (double tau : taus) {
    DeltaCorrelationPoint p;
    p.tau = tau;
    p.window = std::max<std::int64_t>(1, std::llround(tau / eps_a.dt));
    auto guarded = [&](const TimeSeries& e) -> std::optional<double> {
      try {
        return correlation(e, channel, p.window);
      } catch (const Error& err) {
        if (err.code() == Errc::zero_variance || err.code() == Errc::insufficient_data) return {};
        throw;
      }
    };
    p.c_a = guarded(eps_a);
    p.c_b = guarded(eps_b);
    if (p.c_a && p.c_b) p.delta = *p.c_b - *p.c_a;
    out.push_back(p);
  }
  return out;
}

std::string_view to_string(ScalingPrimitive p) {
  switch (p) {
    case ScalingPrimitive::pi_train: return "pi_train";
    case ScalingPrimitive::t1_wait: return "t1_wait";
  }
  return "?";
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "x and y must align");
  if (x.size() < 3) fail(Errc::insufficient_data, "power-law fit needs at least three points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "power-law fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) fail(Errc::zero_variance, "power-law fit needs distinct x values");
  PowerLawFit f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - f.intercept - f.exponent * lx[i];
    sse += r * r;
  }
  f.std_error = std::sqrt(sse / (n - 2.0) / sxx);
  f.points = static_cast<int>(lx.size());
  return f;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace

ScalingStudy uncertainty_scaling_study(ScalingPrimitive primitive, const std::vector<double>& values,
                                       const DeviceTruth& truth, const LabConfig& lab,
                                       const ScalingOptions& opts) {
  require(opts.reps >= 30, "scaling study needs at least 30 repetitions per value");
  require(opts.bootstrap_replicates >= 2, "scaling study needs bootstrap replicates");
  truth.validate();
  LabConfig cfg = lab;
  cfg.bootstrap_replicates = opts.bootstrap_replicates;
  cfg.noiseless = false;
  const CalibrationState state{};
  // A calibrated pi pulse for the frozen device.
  CalibrationState calibrated = state;
  calibrated.a_pi = std::numbers::pi / truth.rabi_per_amp;

  ScalingStudy study;
  study.primitive = primitive;
  std::vector<double> fx, fy;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const double value = values[vi];
    ScalingRow row;
    row.value = value;
    std::vector<double> sig, ttd;
    for (int rep = 0; rep < opts.reps; ++rep) {
      // Mixed per-run seed: studies with neighbouring seeds share no runs.
      Rng mix(opts.seed, (static_cast<std::uint64_t>(vi) << 32) + static_cast<std::uint64_t>(rep));
      Lab l(truth, cfg, mix.engine()());
      ++row.runs;
      try {
        PrimitiveResult r;
        if (primitive == ScalingPrimitive::pi_train) {
          const int n = static_cast<int>(std::llround(value));
          r = calibrate_pi(l, calibrated, TrainOptions{n, opts.shots});
        } else {
          T1Options t1;
          t1.shots = opts.shots;
          t1.wait_scale = value;
          const double guess = opts.t1_guess_us > 0.0 ? opts.t1_guess_us : truth.t1_us();
          r = estimate_t1(l, guess, t1);
        }
        sig.push_back(r.estimate.sigma);
        ttd.push_back(r.estimate.t_decision_ms);
      } catch (const Error& e) {
        if (e.code() == Errc::precondition) throw;
        ++row.failures;
      }
    }
    row.breakdown = 2 * row.failures > row.runs || sig.empty();
    if (!sig.empty()) {
      row.sigma = median(sig);
      row.t_decision_ms = median(ttd);
      row.sigma_sqrt_t = row.sigma * std::sqrt(row.t_decision_ms);
    }
    row.in_fit = !row.breakdown && value >= opts.fit_lo && value <= opts.fit_hi && row.sigma > 0.0;
    if (row.in_fit) {
      fx.push_back(value);
      fy.push_back(row.sigma_sqrt_t);
    }
    study.rows.push_back(row);
  }
  if (fx.size() >= 3) study.fit = fit_power_law(fx, fy);
  return study;
}

}  // namespace sparsecal
