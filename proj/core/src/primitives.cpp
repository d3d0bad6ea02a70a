#include "sparsecal/primitives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "sparsecal/error.hpp"

namespace sparsecal {

namespace {

constexpr double kPi = std::numbers::pi;

ThreePointSample to_sample(const std::array<RawPoint, 3>& pts) {
  ThreePointSample s;
  for (int i = 0; i < 3; ++i) {
    s.p[i] = pts[i].p;
    s.n[i] = pts[i].shots;
    s.coords[i] = pts[i].coord;
  }
  return s;
}

std::array<ShotRecord, 3> to_records(const std::array<RawPoint, 3>& pts) {
  std::array<ShotRecord, 3> r;
  for (int i = 0; i < 3; ++i) r[i] = {pts[i].successes, pts[i].shots};
  return r;
}

bool is_capture_error(const Error& e) {
  return e.code() == Errc::out_of_capture_range || e.code() == Errc::degenerate_denominator;
}

// Evaluates `estimator` on the measured points, replacing value and sigma with
// bootstrap statistics when the lab asks for them.
Estimate analyze(Lab& lab, const std::array<RawPoint, 3>& pts, const SampleEstimator& estimator,
                 double sigma_analytic, PrimitiveResult& r) {
  const ThreePointSample s = to_sample(pts);
  Estimate e;
  e.value = estimator(s);
  e.sigma = sigma_analytic;
  for (const auto& p : pts) e.shots_used += p.shots;
  const int reps = lab.config().bootstrap_replicates;
  if (reps > 0) {
    const auto boot = bootstrap(estimator, to_records(pts), s.coords, reps, lab.bootstrap_rng());
    e.value = boot.estimate.value;
    e.sigma = boot.estimate.sigma;
    e.method = Method::bootstrap;
    r.invalid_replicates = boot.invalid;
  }
  return e;
}

ThreePointSample flipped(ThreePointSample s) {
  for (double& p : s.p) p = 1.0 - p;
  return s;
}

}  // namespace

Lab::Lab(TruthSource truth, LabConfig config, std::uint64_t seed)
    : truth_(std::move(truth)),
      config_(config),
      shot_rng_(seed, Stream::shots),
      reset_rng_(Rng(seed, Stream::shots).fork(1)),
      bootstrap_rng_(seed, Stream::bootstrap) {
  require(static_cast<bool>(truth_), "lab needs a truth source");
}

Lab::Lab(const DeviceTruth& fixed, LabConfig config, std::uint64_t seed)
    : Lab([fixed](Nanos) { return fixed; }, config, seed) {
  fixed.validate();
}

Nanos Lab::reset_time(const DeviceTruth& truth, std::int64_t shots) {
  if (!config_.active_reset) return shots * config_.timing.passive_reset;
  // Repeat-until-success: each round succeeds with the assignment fidelity.
  const std::int64_t rounds =
      shots + reset_rng_.negative_binomial(shots, truth.assignment_fidelity());
  return rounds * config_.timing.reset_round();
}

RawPoint Lab::measure(double coord, double p, std::int64_t shots, Nanos seq) {
  require(shots >= 1, "need at least one shot");
  require(seq >= 0, "sequence duration must be >= 0");
  require(p >= 0.0 && p <= 1.0, "shot probability must lie in [0, 1]");
  const DeviceTruth t = truth();
  RawPoint pt{coord, p, shots, 0};
  if (config_.noiseless) {
    pt.successes = std::llround(p * static_cast<double>(shots));
  } else {
    pt.successes = sample_shots(p, shots, shot_rng_);
    pt.p = static_cast<double>(pt.successes) / static_cast<double>(shots);
  }
  clock_.advance(Phase::seq, shots * seq);
  clock_.advance(Phase::meas, shots * config_.timing.readout);
  clock_.advance(Phase::reset, reset_time(t, shots));
  return pt;
}

std::vector<IqSample> Lab::measure_iq(double ro_detuning, double ro_amp, int prepared_state,
                                      std::int64_t shots) {
  const DeviceTruth t = truth();
  auto samples = sample_iq(t, ro_detuning, ro_amp, prepared_state, shots, shot_rng_, clock_.now());
  clock_.advance(Phase::seq, prepared_state == 1 ? shots * config_.timing.pulse : 0);
  clock_.advance(Phase::meas, shots * config_.timing.readout);
  clock_.advance(Phase::reset, shots * config_.timing.passive_reset);
  return samples;
}

void Lab::decide(int n) {
  require(n >= 0, "decision count must be >= 0");
  const TimingBudget added = account({}, config_.latency, n);
  clock_.advance(Phase::analysis, added.analysis);
  clock_.advance(Phase::ping, added.ping);
  decisions_ += n;
}

BudgetScope::BudgetScope(Lab& lab)
    : lab_(lab), start_(lab.clock().ledger()), decisions_start_(lab.decisions()) {}

void BudgetScope::finish(PrimitiveResult& r) const {
  r.budget = lab_.clock().ledger() - start_;
  r.estimate.t_decision_ms = r.budget.total_ms();
  r.decisions = lab_.decisions() - decisions_start_;
}

// ---------------------------------------------------------------- T1

PrimitiveResult estimate_t1(Lab& lab, double t1_guess_us, const T1Options& opts) {
  require(t1_guess_us > 0.0, "T1 guess must be > 0");
  require(opts.wait_scale > 0.0, "wait scale must be > 0");
  require(opts.t0_us >= 0.0, "first delay must be >= 0");
  BudgetScope scope(lab);
  PrimitiveResult r;
  double d = opts.wait_scale * t1_guess_us;
  const Nanos pulse = lab.config().timing.pulse;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto coords = ade_schedule(opts.t0_us, d);
    std::array<RawPoint, 3> pts;
    for (int i = 0; i < 3; ++i) {
      const double p = p1_after_delay(lab.truth(), coords[i]);
      pts[i] = lab.measure(coords[i], p, opts.shots, pulse + from_us(coords[i]));
      r.raw.push_back(pts[i]);
    }
    lab.decide();
    try {
      const double sigma = propagate_sigma(EstimatorId::ade_rate, to_sample(pts));
      r.estimate = analyze(
          lab, pts, [](const ThreePointSample& s) { return ade_rate(s).value; }, sigma, r);
      scope.finish(r);
      return r;
    } catch (const Error& e) {
      if (!is_capture_error(e)) throw;
      ++r.retries;
      d *= 0.5;
    }
  }
  fail(Errc::capture_failure, "T1: no usable decay after retry");
}

// ---------------------------------------------------------------- readout

namespace {

struct Cloud {
  double i = 0.0;
  double q = 0.0;
  double var = 0.0;
};

Cloud cloud_stats(const std::vector<IqSample>& iq) {
  require(iq.size() >= 2, "need at least two IQ samples per class");
  Cloud c;
  for (const auto& s : iq) {
    c.i += s.i;
    c.q += s.q;
  }
  const double n = static_cast<double>(iq.size());
  c.i /= n;
  c.q /= n;
  for (const auto& s : iq) c.var += (s.i - c.i) * (s.i - c.i) + (s.q - c.q) * (s.q - c.q);
  c.var /= n;
  return c;
}

}  // namespace

double snr_objective(const std::vector<IqSample>& iq0, const std::vector<IqSample>& iq1) {
  const Cloud c0 = cloud_stats(iq0);
  const Cloud c1 = cloud_stats(iq1);
  const double sep = std::hypot(c1.i - c0.i, c1.q - c0.q);
  const double noise = std::sqrt(c0.var + c1.var);
  if (noise == 0.0) return sep == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return sep / noise;
}

IqStats train_iq(const std::vector<IqSample>& iq0, const std::vector<IqSample>& iq1) {
  IqStats st;
  const Cloud c0 = cloud_stats(iq0);
  const Cloud c1 = cloud_stats(iq1);
  st.cls[0] = {c0.i, c0.q, c0.var};
  st.cls[1] = {c1.i, c1.q, c1.var};
  return st;
}

int iq_classify(const std::optional<IqStats>& stats, const IqSample& sample) {
  if (!stats || !(stats->cls[0].var > 0.0) || !(stats->cls[1].var > 0.0)) {
    fail(Errc::untrained, "IQ classifier has no trained class statistics");
  }
  std::array<double, 2> d2{};
  for (int k = 0; k < 2; ++k) {
    const auto& c = stats->cls[k];
    d2[k] = ((sample.i - c.i) * (sample.i - c.i) + (sample.q - c.q) * (sample.q - c.q)) / c.var;
  }
  return d2[1] < d2[0] ? 1 : 0;
}

PrimitiveResult optimize_readout(Lab& lab, const CalibrationState& state,
                                 const ReadoutOptions& opts) {
  require(opts.shots_per_eval >= 10, "readout optimization needs >= 10 shots per state");
  BudgetScope scope(lab);
  PrimitiveResult r;
  double best = -std::numeric_limits<double>::infinity();
  IqStats best_stats;
  std::int64_t shots = 0;
  auto objective = [&](const std::vector<double>& x) {
    const double amp = std::max(0.0, x[1]);
    const auto iq0 = lab.measure_iq(x[0], amp, 0, opts.shots_per_eval);
    const auto iq1 = lab.measure_iq(x[0], amp, 1, opts.shots_per_eval);
    lab.decide();
    shots += 2 * opts.shots_per_eval;
    const double snr = snr_objective(iq0, iq1);
    if (snr > best) {
      best = snr;
      best_stats = train_iq(iq0, iq1);
    }
    return snr;
  };
  NelderMeadOptions nm;
  nm.scale = {opts.scale_detuning, opts.scale_amp};
  nm.x_tol = opts.x_tol;
  nm.f_tol_rel = opts.f_tol_rel;
  nm.max_iter = opts.max_iter;
  nm.goal = Goal::maximize;
  auto res = nelder_mead(objective, {state.ro_detuning, state.ro_amp}, nm);

  CalibrationState next = state;
  next.ro_detuning = res.x[0];
  next.ro_amp = std::max(0.0, res.x[1]);
  next.iq = best_stats;
  r.estimate.value = res.value;
  r.estimate.shots_used = shots;
  r.updated_state = next;
  r.simplex_trace = std::move(res);
  scope.finish(r);
  return r;
}

// ---------------------------------------------------------------- spectroscopy

PrimitiveResult find_resonance(Lab& lab, const CalibrationState& state,
                               const ResonanceOptions& opts) {
  require(opts.bracket_width > 0.0, "bracket width must be > 0");
  require(opts.shots_per_point >= 1, "need at least one shot per point");
  BudgetScope scope(lab);
  PrimitiveResult r;
  const Nanos drive = lab.config().timing.spec_drive;
  auto objective = [&](double f) {
    const RawPoint pt = lab.measure(f, p1_spectroscopy(lab.truth(), f), opts.shots_per_point, drive);
    lab.decide();
    r.raw.push_back(pt);
    r.estimate.shots_used += pt.shots;
    return pt.p;
  };
  GoldenOptions g;
  g.n_iter = opts.n_iter;
  g.goal = Goal::maximize;
  const double half = 0.5 * opts.bracket_width;
  auto res = golden_section(objective, state.f_drive - half, state.f_drive + half, g);
  r.estimate.value = res.x_best;
  // Uniform over the final bracket.
  r.estimate.sigma = (res.b - res.a) / std::sqrt(12.0);
  CalibrationState next = state;
  next.f_drive = res.x_best;
  r.updated_state = next;
  r.bracket_trace = std::move(res);
  scope.finish(r);
  return r;
}

// ---------------------------------------------------------------- phase trains

std::array<double, 3> train_scales(int n) {
  require(n >= 1, "train length must be >= 1");
  const double h = 0.5 / static_cast<double>(n);
  return {1.0 - h, 1.0, 1.0 + h};
}

double train_angle_error(double theta, int n) {
  require(n >= 1, "train length must be >= 1");
  const double target = std::fmod(static_cast<double>(n) * kPi, 2.0 * kPi);
  return wrap_angle(theta - target) / static_cast<double>(n);
}

namespace {

// Shared body of the pi and pi/2 calibrations. `response` gives P1 for a
// given amplitude scale; the per-unit error is the per-pulse (or per-pair)
// angle error.
template <class Response>
PrimitiveResult run_train(Lab& lab, int n, std::int64_t shots, Nanos seq, Response response) {
  require(n >= 1, "train length must be >= 1");
  require(shots >= 1, "need at least one shot per point");
  PrimitiveResult r;
  const auto scales = train_scales(n);
  std::array<RawPoint, 3> pts;
  for (int i = 0; i < 3; ++i) {
    pts[i] = lab.measure(scales[i], response(lab.truth(), scales[i]), shots, seq);
    r.raw.push_back(pts[i]);
  }
  lab.decide();
  // The train phase is read from the ground-state population.
  auto estimator = [n](const ThreePointSample& s) {
    return train_angle_error(spe_phase(flipped(s)).value, n);
  };
  const double sigma =
      propagate_sigma(EstimatorId::spe_phase, flipped(to_sample(pts))) / static_cast<double>(n);
  r.estimate = analyze(lab, pts, estimator, sigma, r);
  return r;
}

}  // namespace

PrimitiveResult calibrate_pi(Lab& lab, const CalibrationState& state, const TrainOptions& opts) {
  BudgetScope scope(lab);
  const Nanos pulse = lab.config().timing.pulse;
  PrimitiveResult r = run_train(lab, opts.n, opts.shots, opts.n * pulse,
                                [&](const DeviceTruth& t, double scale) {
                                  return p1_pi_train(t, state, opts.n, scale, pulse);
                                });
  CalibrationState next = state;
  next.a_pi = state.a_pi * kPi / (kPi + r.estimate.value);
  r.updated_state = next;
  scope.finish(r);
  return r;
}

PrimitiveResult calibrate_pi_half(Lab& lab, const CalibrationState& state,
                                  const TrainOptions& opts) {
  BudgetScope scope(lab);
  const Nanos pulse = lab.config().timing.pulse;
  PrimitiveResult r = run_train(lab, opts.n, opts.shots, 2 * opts.n * pulse,
                                [&](const DeviceTruth& t, double scale) {
                                  return p1_pi_half_pairs(t, state, opts.n, scale, pulse);
                                });
  const double per_pair = r.estimate.value;
  CalibrationState next = state;
  next.a_pi2 = state.a_pi2 * kPi / (kPi + per_pair);
  r.updated_state = next;
  // Report the per-pulse error.
  r.estimate.value *= 0.5;
  r.estimate.sigma *= 0.5;
  scope.finish(r);
  return r;
}

PrimitiveResult calibrate_frequency_ramsey(Lab& lab, const CalibrationState& state,
                                           const RamseyOptions& opts) {
  require(opts.tau_us > 0.0, "Ramsey delay must be > 0");
  require(opts.shots >= 1, "need at least one shot per point");
  BudgetScope scope(lab);
  PrimitiveResult r;
  const double q = 0.25 / opts.tau_us;
  const double d0 = opts.detuning_guess;
  // The phase 2 pi (offset - d) tau falls with d, so the "-" point sits above d0.
  const std::array<double, 3> det{d0 + q, d0, d0 - q};
  const Nanos seq = 2 * lab.config().timing.pulse + from_us(opts.tau_us);
  std::array<RawPoint, 3> pts;
  for (int i = 0; i < 3; ++i) {
    pts[i] = lab.measure(det[i], p1_ramsey(lab.truth(), state, det[i], opts.tau_us), opts.shots, seq);
    r.raw.push_back(pts[i]);
  }
  lab.decide();
  const double scale = 1.0 / (2.0 * kPi * opts.tau_us);
  auto estimator = [d0, scale](const ThreePointSample& s) {
    return d0 + spe_phase(s).value * scale;
  };
  const double sigma = propagate_sigma(EstimatorId::spe_phase, to_sample(pts)) * scale;
  r.estimate = analyze(lab, pts, estimator, sigma, r);
  CalibrationState next = state;
  next.f_drive = state.f_drive + r.estimate.value;
  r.updated_state = next;
  scope.finish(r);
  return r;
}

// ---------------------------------------------------------------- CRB

RawPoint measure_crb_length(Lab& lab, const CalibrationState& state, std::int64_t m,
                            const CrbOptions& opts) {
  require(m >= 0, "Clifford count must be >= 0");
  require(opts.shots >= 1 && opts.sequences_per_length >= 1, "need shots and sequences");
  const Nanos clifford = lab.config().timing.clifford;
  // m random Cliffords plus the recovery gate.
  const Nanos seq = (m + 1) * clifford;
  RawPoint total{static_cast<double>(m), 0.0, 0, 0};
  double p_sum = 0.0;
  for (int s = 0; s < opts.sequences_per_length; ++s) {
    double p = crb_survival(lab.truth(), state, m, clifford);
    if (opts.depth_noise > 0.0 && !lab.config().noiseless) {
      p = std::clamp(p + opts.depth_noise * std::sqrt(static_cast<double>(m)) * lab.shot_rng().normal(),
                     0.0, 1.0);
    }
    const RawPoint pt = lab.measure(static_cast<double>(m), p, opts.shots, seq);
    total.shots += pt.shots;
    total.successes += pt.successes;
    p_sum += pt.p * static_cast<double>(pt.shots);
  }
  total.p = p_sum / static_cast<double>(total.shots);
  return total;
}

PrimitiveResult run_crb_ade(Lab& lab, const CalibrationState& state, const CrbOptions& opts) {
  require(opts.m0 >= 0 && opts.dm >= 1, "CRB needs m0 >= 0 and dm >= 1");
  BudgetScope scope(lab);
  PrimitiveResult r;
  std::int64_t dm = opts.dm;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::array<RawPoint, 3> pts;
    const std::array<std::int64_t, 3> lengths{opts.m0, opts.m0 + dm, opts.m0 + 3 * dm};
    for (int i = 0; i < 3; ++i) {
      pts[i] = measure_crb_length(lab, state, lengths[i], opts);
      r.raw.push_back(pts[i]);
    }
    lab.decide();
    try {
      const double sigma = 0.5 * propagate_sigma(EstimatorId::ade_decay_base, to_sample(pts));
      r.estimate = analyze(
          lab, pts, [](const ThreePointSample& s) { return clifford_fidelity(s).value; }, sigma,
          r);
      scope.finish(r);
      return r;
    } catch (const Error& e) {
      if (!is_capture_error(e)) throw;
      ++r.retries;
      dm = std::max<std::int64_t>(1, dm / 2);
    }
  }
  fail(Errc::capture_failure, "CRB: no usable decay after retry");
}

namespace {

struct LinearFit {
  double a = 0.0;
  double c = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

// Least squares for y = c + a * p^m at fixed p.
LinearFit solve_linear(const std::vector<double>& m, const std::vector<double>& y, double p) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double x = std::pow(p, m[i]);
    sx += x;
    sy += y[i];
    sxx += x * x;
    sxy += x * y[i];
  }
  const double det = n * sxx - sx * sx;
  LinearFit f;
  if (!(std::abs(det) > 1e-300)) return f;
  f.a = (n * sxy - sx * sy) / det;
  f.c = (sy - f.a * sx) / n;
  f.sse = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double e = y[i] - f.c - f.a * std::pow(p, m[i]);
    f.sse += e * e;
  }
  return f;
}

using Mat3 = std::array<std::array<double, 3>, 3>;

bool invert3(const Mat3& a, Mat3& inv) {
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) return false;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
      inv[i][j] = (a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1]) / det;
    }
  }
  return true;
}

}  // namespace

DecayFit fit_exponential_decay(const std::vector<double>& m, const std::vector<double>& y,
                               const std::vector<double>& var) {
  require(m.size() == y.size(), "lengths and probabilities must align");
  require(var.empty() || var.size() == m.size(), "variances must align");
  std::vector<double> distinct = m;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(distinct.size() >= 4, "dense fit needs at least four distinct lengths");

  // Search over u = -ln p on a log grid.
  const int grid = 600;
  const double lo = std::log(1e-8), hi = std::log(5.0);
  auto sse_at = [&](double log_u) { return solve_linear(m, y, std::exp(-std::exp(log_u))).sse; };
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= grid; ++k) {
    const double lu = lo + (hi - lo) * k / grid;
    const double s = sse_at(lu);
    if (s < best_sse) {
      best_sse = s;
      best = k;
    }
  }
  if (!std::isfinite(best_sse)) fail(Errc::fit_failure, "dense fit: singular design at every p");
  const double step = (hi - lo) / grid;
  const double a = lo + (hi - lo) * best / grid - step;
  const double b = a + 2.0 * step;
  GoldenOptions g;
  g.n_iter = 80;
  g.goal = Goal::minimize;
  const double lu = golden_section(sse_at, a, b, g).x_best;
  DecayFit fit;
  fit.p = std::exp(-std::exp(lu));
  const LinearFit lf = solve_linear(m, y, fit.p);
  fit.amplitude = lf.a;
  fit.offset = lf.c;
  fit.residual = std::sqrt(lf.sse / static_cast<double>(m.size()));
  if (!std::isfinite(fit.p) || !std::isfinite(lf.sse) || !(fit.p > 0.0) || fit.p > 1.0) {
    fail(Errc::fit_failure, "dense fit did not converge");
  }
  if (!var.empty()) {
    // Sandwich covariance of the unweighted fit: M^-1 (J' S J) M^-1.
    Mat3 mm{}, bb{};
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double pm = std::pow(fit.p, m[i]);
      const std::array<double, 3> j{pm, 1.0, m[i] > 0 ? fit.amplitude * m[i] * pm / fit.p : 0.0};
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          mm[r][c] += j[r] * j[c];
          bb[r][c] += j[r] * j[c] * var[i];
        }
      }
    }
    Mat3 inv{};
    if (!invert3(mm, inv)) fail(Errc::fit_failure, "dense fit: singular information matrix");
    double cov = 0.0;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cov += inv[2][r] * bb[r][c] * inv[c][2];
    }
    fit.sigma_p = std::sqrt(std::max(0.0, cov));
  }
  return fit;
}

PrimitiveResult run_crb_dense(Lab& lab, const CalibrationState& state,
                              const std::vector<std::int64_t>& lengths, const CrbOptions& opts) {
  BudgetScope scope(lab);
  PrimitiveResult r;
  std::vector<double> m, y, var;
  for (auto len : lengths) {
    const RawPoint pt = measure_crb_length(lab, state, len, opts);
    r.raw.push_back(pt);
    m.push_back(pt.coord);
    y.push_back(pt.p);
    var.push_back(point_variance(pt.p, pt.shots));
    r.estimate.shots_used += pt.shots;
  }
  lab.decide();
  const DecayFit fit = fit_exponential_decay(m, y, var);
  r.estimate.value = 0.5 * (1.0 + fit.p);
  r.estimate.sigma = 0.5 * fit.sigma_p;
  scope.finish(r);
  return r;
}

}  // namespace sparsecal
