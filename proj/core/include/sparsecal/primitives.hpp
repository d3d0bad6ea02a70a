#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparsecal/device.hpp"
#include "sparsecal/estimators.hpp"
#include "sparsecal/optimizers.hpp"
#include "sparsecal/rng.hpp"
#include "sparsecal/timing.hpp"

namespace sparsecal {

/// Ground truth as a function of the simulated clock.
using TruthSource = std::function<DeviceTruth(Nanos)>;

struct LabConfig {
  SimTiming timing{};
  LatencyModel latency{};
  bool noiseless = false;     ///< use exact probabilities instead of sampled shots
  bool active_reset = true;   ///< repeat-until-success reset; passive wait otherwise
  int bootstrap_replicates = 0;  ///< 0 keeps analytic propagation
};

/// One measured point of a primitive.
struct RawPoint {
  double coord = 0.0;
  double p = 0.0;  ///< estimated probability
  std::int64_t shots = 0;
  std::int64_t successes = 0;
};

/// Execution context shared by the primitives: truth, clock, randomness and
/// the latency model. Every shot advances the clock.
class Lab {
 public:
  Lab(TruthSource truth, LabConfig config, std::uint64_t seed);
  Lab(const DeviceTruth& fixed, LabConfig config, std::uint64_t seed);

  DeviceTruth truth() const { return truth_(clock_.now()); }
  SimClock& clock() { return clock_; }
  const SimClock& clock() const { return clock_; }
  const LabConfig& config() const { return config_; }
  LabConfig& config() { return config_; }
  Rng& bootstrap_rng() { return bootstrap_rng_; }
  Rng& shot_rng() { return shot_rng_; }

  /// Runs `shots` repetitions of a sequence of length `seq` whose outcome is 1
  /// with probability p, followed by readout and reset.
  RawPoint measure(double coord, double p, std::int64_t shots, Nanos seq);
  /// Single-shot IQ records; always uses passive reset.
  std::vector<IqSample> measure_iq(double ro_detuning, double ro_amp, int prepared_state,
                                   std::int64_t shots);
  /// One classical decision: analysis time plus a round trip when offloading.
  void decide(int n = 1);
  std::int64_t decisions() const { return decisions_; }

 private:
  Nanos reset_time(const DeviceTruth& truth, std::int64_t shots);

  TruthSource truth_;
  LabConfig config_;
  SimClock clock_;
  Rng shot_rng_;
  Rng reset_rng_;
  Rng bootstrap_rng_;
  std::int64_t decisions_ = 0;
};

struct PrimitiveResult {
  Estimate estimate;
  TimingBudget budget;
  std::vector<RawPoint> raw;
  std::optional<CalibrationState> updated_state;
  std::int64_t decisions = 0;
  int retries = 0;
  int invalid_replicates = 0;
  std::optional<NelderMeadResult> simplex_trace;
  std::optional<GoldenResult> bracket_trace;
};

/// Measures the budget of everything the lab does between construction and
/// finish(), and stamps the estimate with the time-to-decision.
class BudgetScope {
 public:
  explicit BudgetScope(Lab& lab);
  void finish(PrimitiveResult& r) const;

 private:
  Lab& lab_;
  TimingBudget start_;
  std::int64_t decisions_start_;
};

// --- T1 ---

struct T1Options {
  std::int64_t shots = 50;     ///< per point
  double t0_us = 0.016;
  double wait_scale = 1.0;     ///< delay step as a multiple of the T1 guess
};

/// Relaxation rate from delays {t0, t0 + d, t0 + 3d} with d = wait_scale * guess.
/// Retries once with d halved, then raises Errc::capture_failure.
PrimitiveResult estimate_t1(Lab& lab, double t1_guess_us, const T1Options& opts = {});

// --- readout ---

/// ||mu1 - mu0|| / sqrt(var0 + var1), var_k the mean squared radial deviation.
double snr_objective(const std::vector<IqSample>& iq0, const std::vector<IqSample>& iq1);
IqStats train_iq(const std::vector<IqSample>& iq0, const std::vector<IqSample>& iq1);
/// Smallest variance-normalized distance; ties go to class 0.
int iq_classify(const std::optional<IqStats>& stats, const IqSample& sample);

struct ReadoutOptions {
  std::int64_t shots_per_eval = 100;  ///< per prepared state
  double scale_detuning = 0.3;
  double scale_amp = 0.15;
  double x_tol = 1e-3;
  double f_tol_rel = 1e-3;
  int max_iter = 20;
};

/// Nelder-Mead over (readout detuning, readout amplitude) maximizing the
/// measured SNR; trains the IQ classifier at the best point.
PrimitiveResult optimize_readout(Lab& lab, const CalibrationState& state,
                                 const ReadoutOptions& opts = {});

// --- spectroscopy ---

struct ResonanceOptions {
  double bracket_width = 15.0;  ///< MHz, centred on the current drive frequency
  std::int64_t shots_per_point = 250;
  int n_iter = 12;
};

PrimitiveResult find_resonance(Lab& lab, const CalibrationState& state,
                               const ResonanceOptions& opts = {});

// --- phase-estimation calibrations ---

/// Scalings {1 - 1/(2n), 1, 1 + 1/(2n)} of an n-pulse train.
std::array<double, 3> train_scales(int n);
/// Per-pulse angle error from the train phase: wrap(theta - n*pi) / n.
double train_angle_error(double theta, int n);

struct TrainOptions {
  int n = 21;                  ///< pi pulses, or pi/2 pulse pairs
  std::int64_t shots = 1000;   ///< per point
};

PrimitiveResult calibrate_pi(Lab& lab, const CalibrationState& state, const TrainOptions& opts = {});
PrimitiveResult calibrate_pi_half(Lab& lab, const CalibrationState& state,
                                  const TrainOptions& opts = {});

struct RamseyOptions {
  double tau_us = 2.0;
  std::int64_t shots = 500;   ///< per point
  double detuning_guess = 0.0;
};

PrimitiveResult calibrate_frequency_ramsey(Lab& lab, const CalibrationState& state,
                                           const RamseyOptions& opts = {});

// --- Clifford randomized benchmarking ---

struct CrbOptions {
  std::int64_t m0 = 1;
  std::int64_t dm = 333;
  std::int64_t shots = 100;  ///< per sequence
  int sequences_per_length = 10;
  /// Extra per-sequence survival spread, stddev = depth_noise * sqrt(m); 0 disables.
  double depth_noise = 0.0;
};

/// Gate fidelity (1 + p) / 2 from lengths {m0, m0 + dm, m0 + 3 dm}.
PrimitiveResult run_crb_ade(Lab& lab, const CalibrationState& state, const CrbOptions& opts = {});

/// Least-squares fit of C + A p^m.
struct DecayFit {
  double amplitude = 0.0;
  double offset = 0.0;
  double p = 0.0;
  double sigma_p = 0.0;
  double residual = 0.0;
};

/// Separable least squares: grid over p, linear solve for (A, C), then a
/// golden-section refine. var gives per-point variances for sigma_p; pass
/// an empty vector to skip the uncertainty.
DecayFit fit_exponential_decay(const std::vector<double>& m, const std::vector<double>& p,
                               const std::vector<double>& var = {});

PrimitiveResult run_crb_dense(Lab& lab, const CalibrationState& state,
                              const std::vector<std::int64_t>& lengths, const CrbOptions& opts = {});

/// Sequence length in Clifford count -> survival measurement at one length.
RawPoint measure_crb_length(Lab& lab, const CalibrationState& state, std::int64_t m,
                            const CrbOptions& opts);

}  // namespace sparsecal
