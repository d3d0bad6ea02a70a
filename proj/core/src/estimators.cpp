#include "sparsecal/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "sparsecal/error.hpp"

namespace sparsecal {

namespace {

constexpr double kPi = std::numbers::pi;

void check_sample(const ThreePointSample& s) {
  for (int i = 0; i < 3; ++i) {
    require(s.n[i] >= 1, "shot counts must be >= 1");
    require(std::isfinite(s.p[i]), "probabilities must be finite");
  }
}

// Returns the ADE step d and validates the 1:3 spacing of the schedule.
double ade_step(const ThreePointSample& s) {
  const double d = s.coords[1] - s.coords[0];
  const double d3 = s.coords[2] - s.coords[0];
  require(d > 0.0, "ADE schedule must be increasing");
  require(std::abs(d3 - 3.0 * d) <= 1e-9 * std::abs(d3), "ADE schedule must be (x0, x0+d, x0+3d)");
  return d;
}

struct RatioParts {
  double c;
  double num;
  double den;
};

RatioParts ratio_parts(const ThreePointSample& s) {
  const double den = s.p[1] - s.p[0];
  const double num = s.p[2] - s.p[0];
  if (std::abs(den) <= kDenominatorEps) {
    fail(Errc::degenerate_denominator, "ADE: flat signal, no decay information");
  }
  return {num / den, num, den};
}

// Gradient of c with respect to (p_a, p_b, p_c).
std::array<double, 3> ratio_gradient(const RatioParts& r) {
  const double d2 = r.den * r.den;
  return {(r.num - r.den) / d2, -r.num / d2, 1.0 / r.den};
}

double combine(const std::array<double, 3>& grad, const ThreePointSample& s) {
  double var = 0.0;
  for (int i = 0; i < 3; ++i) var += grad[i] * grad[i] * point_variance(s.p[i], s.n[i]);
  return std::sqrt(var);
}

std::int64_t total_shots(const ThreePointSample& s) { return s.n[0] + s.n[1] + s.n[2]; }

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::array<double, 3> ade_schedule(double x0, double d) { return {x0, x0 + d, x0 + 3.0 * d}; }

double ade_ratio(const ThreePointSample& s) {
  check_sample(s);
  return ratio_parts(s).c;
}

double ade_root(double c) {
  if (!(c > 1.0 && c < 3.0)) {
    fail(Errc::out_of_capture_range, "ADE: ratio outside (1, 3), not a decay over this window");
  }
  // Root of x^2 + x + 1 = c, written without the sqrt - 1/2 cancellation.
  return (c - 1.0) / (0.5 + std::sqrt(c - 0.75));
}

double decay_rate_from_ratio(double c, double d) {
  require(d > 0.0, "ADE step must be > 0");
  return -std::log(ade_root(c)) / d;
}

double decay_base_from_ratio(double c, double dm) {
  require(dm > 0.0, "ADE step must be > 0");
  return std::pow(ade_root(c), 1.0 / dm);
}

Estimate ade_rate(const ThreePointSample& s) {
  check_sample(s);
  const double d = ade_step(s);
  const double rate = decay_rate_from_ratio(ratio_parts(s).c, d);
  return {rate, propagate_sigma(EstimatorId::ade_rate, s), total_shots(s), 0.0, Method::analytic};
}

Estimate ade_decay_base(const ThreePointSample& s) {
  check_sample(s);
  const double dm = ade_step(s);
  const double p = decay_base_from_ratio(ratio_parts(s).c, dm);
  return {p, propagate_sigma(EstimatorId::ade_decay_base, s), total_shots(s), 0.0,
          Method::analytic};
}

Estimate clifford_fidelity(const ThreePointSample& s) {
  Estimate e = ade_decay_base(s);
  e.value = 0.5 * (1.0 + e.value);
  e.sigma *= 0.5;
  return e;
}

Estimate spe_phase(const ThreePointSample& s) {
  check_sample(s);
  const double y = s.p[0] - s.p[2];
  const double x = 2.0 * s.p[1] - s.p[0] - s.p[2];
  if (std::abs(x) <= kDenominatorEps && std::abs(y) <= kDenominatorEps) {
    fail(Errc::no_contrast, "SPE: no visible contrast");
  }
  double theta = std::atan2(y, x);
  if (theta == -kPi) theta = kPi;
  return {theta, propagate_sigma(EstimatorId::spe_phase, s), total_shots(s), 0.0,
          Method::analytic};
}

double point_variance(double p, std::int64_t n) {
  require(n >= 1, "shot counts must be >= 1");
  const double nn = static_cast<double>(n);
  if (p <= 0.0 || p >= 1.0) return 1.0 / ((nn + 2.0) * (nn + 2.0));
  return p * (1.0 - p) / nn;
}

double propagate_sigma(EstimatorId id, const ThreePointSample& s) {
  check_sample(s);
  switch (id) {
    case EstimatorId::ade_rate:
    case EstimatorId::ade_decay_base: {
      const double d = ade_step(s);
      const RatioParts r = ratio_parts(s);
      const double x = ade_root(r.c);
      // dx/dc = 1 / (2 sqrt(c - 3/4)).
      const double dxdc = 0.5 / std::sqrt(r.c - 0.75);
      double scale = 0.0;
      if (id == EstimatorId::ade_rate) {
        scale = dxdc / (x * d);  // |d rate / dc|
      } else {
        const double p = std::pow(x, 1.0 / d);
        scale = dxdc * p / (d * x);  // |dp / dc|
      }
      auto grad = ratio_gradient(r);
      for (double& g : grad) g *= scale;
      return combine(grad, s);
    }
    case EstimatorId::spe_phase: {
      const double y = s.p[0] - s.p[2];
      const double x = 2.0 * s.p[1] - s.p[0] - s.p[2];
      const double r2 = x * x + y * y;
      if (r2 <= kDenominatorEps * kDenominatorEps) fail(Errc::no_contrast, "SPE: no visible contrast");
      // theta = atan2(y, x); dtheta = (x dy - y dx) / r2.
      const double dy_dx = x / r2;
      const double dx_dx = -y / r2;
      const std::array<double, 3> grad{dy_dx * 1.0 + dx_dx * -1.0, dx_dx * 2.0,
                                       dy_dx * -1.0 + dx_dx * -1.0};
      return combine(grad, s);
    }
  }
  return 0.0;
}

BootstrapResult bootstrap(const SampleEstimator& estimator, const std::array<ShotRecord, 3>& records,
                          const std::array<double, 3>& coords, int replicates, Rng& rng) {
  require(replicates >= 2, "bootstrap needs at least two replicates");
  for (const auto& r : records) {
    require(r.shots >= 1 && r.successes >= 0 && r.successes <= r.shots, "invalid shot record");
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(replicates));
  int invalid = 0;
  ThreePointSample s;
  s.coords = coords;
  for (int b = 0; b < replicates; ++b) {
    for (int i = 0; i < 3; ++i) {
      const auto& r = records[i];
      // Drawing n shots with replacement from k ones and n-k zeros.
      const double p_hat = static_cast<double>(r.successes) / static_cast<double>(r.shots);
      s.p[i] = static_cast<double>(rng.binomial(r.shots, p_hat)) / static_cast<double>(r.shots);
      s.n[i] = r.shots;
    }
    try {
      const double v = estimator(s);
      if (std::isfinite(v)) {
        values.push_back(v);
      } else {
        ++invalid;
      }
    } catch (const Error& e) {
      if (e.code() == Errc::precondition) throw;
      ++invalid;
    }
  }
  if (2 * invalid > replicates) {
    fail(Errc::too_many_invalid_replicates,
         "bootstrap: " + std::to_string(invalid) + " of " + std::to_string(replicates) +
             " replicates rejected by the estimator");
  }
  std::sort(values.begin(), values.end());
  const double median = percentile(values, 0.5);
  const double lo = percentile(values, 0.5 - 0.6826894921370859 / 2.0);
  const double hi = percentile(values, 0.5 + 0.6826894921370859 / 2.0);
  std::int64_t shots = 0;
  for (const auto& r : records) shots += r.shots;
  BootstrapResult out;
  out.estimate = {median, 0.5 * (hi - lo), shots, 0.0, Method::bootstrap};
  out.replicates = replicates;
  out.invalid = invalid;
  return out;
}

BootstrapResult bootstrap(EstimatorId id, const std::array<ShotRecord, 3>& records,
                          const std::array<double, 3>& coords, int replicates, Rng& rng) {
  SampleEstimator f;
  switch (id) {
    case EstimatorId::ade_rate: f = [](const ThreePointSample& s) { return ade_rate(s).value; }; break;
    case EstimatorId::ade_decay_base:
      f = [](const ThreePointSample& s) { return ade_decay_base(s).value; };
      break;
    case EstimatorId::spe_phase: f = [](const ThreePointSample& s) { return spe_phase(s).value; }; break;
  }
  return bootstrap(f, records, coords, replicates, rng);
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

}  // namespace sparsecal
