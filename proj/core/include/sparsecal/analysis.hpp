#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sparsecal/device.hpp"
#include "sparsecal/primitives.hpp"

namespace sparsecal {

/// Uniformly sampled series. `edge` marks points computed from a window that
/// had to be shifted to stay inside the data.
struct TimeSeries {
  std::vector<double> t;  ///< seconds
  std::vector<double> v;
  std::vector<double> sigma;  ///< optional, empty or same length as v
  std::vector<bool> edge;     ///< optional, empty or same length as v
  double dt = 1.0;

  static TimeSeries uniform(std::vector<double> values, double dt, double t0 = 0.0);
  std::size_t size() const { return v.size(); }
  /// Throws Errc::precondition unless timestamps increase with uniform spacing.
  void validate() const;
};

struct AllanPoint {
  double tau = 0.0;
  double adev = 0.0;
  std::int64_t m = 0;
};

/// Overlapping Allan deviation. Each tau is rounded to a whole number of
/// samples; at least three non-overlapping spans are required.
std::vector<AllanPoint> allan_deviation(const TimeSeries& s, const std::vector<double>& taus);

/// Roughly log-spaced taus from one sample up to N/3 samples.
std::vector<double> log_taus(const TimeSeries& s, int per_decade = 8);

/// Allan variance of an exponentially correlated process with variance q/2
/// and correlation time tau_c.
double lorentzian_avar(double tau, double q, double tau_c);

struct AllanFit {
  double white = 0.0;    ///< W: white term W^2 / tau
  double flicker = 0.0;  ///< F: flat term F^2
  double lorentz_q = 0.0;
  double tau_c = 0.0;
  double residual = 0.0;  ///< rms log-variance residual
  bool degenerate = false;

  double avar(double tau) const;
  double adev(double tau) const;
};

/// Least squares in log variance, equal weight per decade, of
/// W^2/tau + F^2 + L(tau; q, tau_c). Needs >= 6 points.
AllanFit fit_allan_models(const std::vector<AllanPoint>& curve);

/// Allan deviation with the fitted white component removed.
std::vector<AllanPoint> subtract_white(const std::vector<AllanPoint>& curve, const AllanFit& fit);

/// Centred moving mean of `window` points; near the ends the window is
/// shifted inside the data and the point is flagged.
TimeSeries rolling_average(const TimeSeries& s, std::int64_t window);

/// Every factor-th point starting at index 0.
TimeSeries downsample(const TimeSeries& s, std::int64_t factor);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson r after smoothing both series with the same window, over the
/// points that are not edge-flagged.
double correlation(const TimeSeries& x, const TimeSeries& y, std::int64_t window);

struct DeltaCorrelationPoint {
  double tau = 0.0;
  std::int64_t window = 0;
  std::optional<double> c_a;
  std::optional<double> c_b;
  std::optional<double> delta;  ///< c_b - c_a; empty when either side had no variance
};

std::vector<DeltaCorrelationPoint> delta_correlation(const TimeSeries& eps_a,
                                                     const TimeSeries& eps_b,
                                                     const TimeSeries& channel,
                                                     const std::vector<double>& taus);

// --- uncertainty scaling ---

enum class ScalingPrimitive { pi_train, t1_wait };

std::string_view to_string(ScalingPrimitive p);

struct ScalingOptions {
  int reps = 50;
  int bootstrap_replicates = 300;
  std::int64_t shots = 100;  ///< per point
  double t1_guess_us = 0.0;  ///< 0 uses the true T1
  double fit_lo = 0.0;       ///< fit only values in [fit_lo, fit_hi]
  double fit_hi = 1e300;
  std::uint64_t seed = 1;
};

struct ScalingRow {
  double value = 0.0;
  double t_decision_ms = 0.0;  ///< median over runs
  double sigma = 0.0;          ///< median bootstrap sigma
  double sigma_sqrt_t = 0.0;   ///< sigma * sqrt(T / ms)
  int runs = 0;
  int failures = 0;
  bool breakdown = false;
  bool in_fit = false;
};

struct PowerLawFit {
  double exponent = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  int points = 0;
};

/// Ordinary least squares of log y on log x.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingStudy {
  ScalingPrimitive primitive = ScalingPrimitive::pi_train;
  std::vector<ScalingRow> rows;
  PowerLawFit fit;
};

/// Sweeps pi-train length n, or T1 wait scale alpha, on a frozen device.
ScalingStudy uncertainty_scaling_study(ScalingPrimitive primitive, const std::vector<double>& values,
                                       const DeviceTruth& truth, const LabConfig& lab,
                                       const ScalingOptions& opts);

}  // namespace sparsecal
