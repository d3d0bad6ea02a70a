#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "sparsecal/rng.hpp"

namespace sparsecal {

enum class Method { analytic, bootstrap };

/// A value with its 1-sigma uncertainty and what it cost to obtain.
struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
  std::int64_t shots_used = 0;
  double t_decision_ms = 0.0;
  Method method = Method::analytic;
};

/// Three measured probabilities with their shot counts and sampling
/// coordinates. ADE uses coords (x0, x0 + d, x0 + 3d); SPE uses
/// (theta_minus, theta_0, theta_plus) and stores P in the same order.
struct ThreePointSample {
  std::array<double, 3> p{};
  std::array<std::int64_t, 3> n{1, 1, 1};
  std::array<double, 3> coords{};
};

/// Raw per-point shot outcomes kept for bootstrap resampling.
struct ShotRecord {
  std::int64_t successes = 0;
  std::int64_t shots = 0;
};

/// Denominators at or below this (probability units) carry no information.
inline constexpr double kDenominatorEps = 1e-9;

/// ADE coordinates (x0, x0 + d, x0 + 3d).
std::array<double, 3> ade_schedule(double x0, double d);

/// c = (P(x0 + 3d) - P(x0)) / (P(x0 + d) - P(x0)). Offset and amplitude cancel.
double ade_ratio(const ThreePointSample& s);

/// x = exp(-rate * d) recovered from the ratio; requires c in (1, 3).
double ade_root(double c);
double decay_rate_from_ratio(double c, double d);
double decay_base_from_ratio(double c, double dm);

/// Decay rate from a sample on an ADE schedule, with propagated sigma.
Estimate ade_rate(const ThreePointSample& s);
/// Per-step decay base p (e.g. per Clifford) from an integer ADE schedule.
Estimate ade_decay_base(const ThreePointSample& s);
/// Average Clifford fidelity (1 + p) / 2 for a single qubit.
Estimate clifford_fidelity(const ThreePointSample& s);

/// Sinusoid argument at the centre point: atan2(P- - P+, 2 (P0 - Pbar)).
/// Output lies in (-pi, pi].
Estimate spe_phase(const ThreePointSample& s);

enum class EstimatorId { ade_rate, ade_decay_base, spe_phase };

/// Binomial variance of a point, floored at 1/(n+2)^2 when p is 0 or 1.
double point_variance(double p, std::int64_t n);

/// First-order error propagation of shot noise through the closed form.
double propagate_sigma(EstimatorId id, const ThreePointSample& s);

using SampleEstimator = std::function<double(const ThreePointSample&)>;

struct BootstrapResult {
  Estimate estimate;
  int replicates = 0;
  int invalid = 0;
};

/// Resamples the shots of each point with replacement, re-evaluates the
/// estimator and reports the median with half the central 68.3% interval.
/// Replicates the estimator rejects are counted; more than half rejected
/// raises Errc::too_many_invalid_replicates.
BootstrapResult bootstrap(const SampleEstimator& estimator, const std::array<ShotRecord, 3>& records,
                          const std::array<double, 3>& coords, int replicates, Rng& rng);
BootstrapResult bootstrap(EstimatorId id, const std::array<ShotRecord, 3>& records,
                          const std::array<double, 3>& coords, int replicates, Rng& rng);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace sparsecal
