#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "sparsecal/rng.hpp"
#include "sparsecal/timing.hpp"

namespace sparsecal {

/// Ground-truth physics of the simulated transmon. Frequencies in MHz,
/// times in microseconds, amplitudes in arbitrary drive units.
struct DeviceTruth {
  double gamma1 = 1.0 / 20.0;  ///< relaxation rate, 1/us
  double f01 = 0.0;            ///< transition offset from the fixed reference
  double rabi_per_amp = 2.0 * std::numbers::pi;  ///< rad per pulse per amplitude unit
  double spec_linewidth = 0.5;   ///< spectroscopy half width
  double spec_background = 0.02;
  double spec_height = 0.45;
  double chi = 0.6;     ///< dispersive shift
  double kappa = 2.0;   ///< resonator linewidth
  double a_crit = 1.0;  ///< readout amplitude where the high-power penalty reaches 1/e
  double iq_noise = 0.08;
  double p_prep1 = 0.97;
  double p_read_eg = 0.01;  ///< P(read 1 | qubit in 0)
  double p_read_ge = 0.03;  ///< P(read 0 | qubit in 1)
  double thermal_floor = 0.0;
  /// T2_eff = t2_over_t1 * T1; zero or negative disables the dephasing envelope.
  double t2_over_t1 = 2.0;
  // Clifford error model coefficients.
  double c_coh = 0.5;
  double c_det = 0.25;
  double c_amp = 0.25;

  /// Throws Errc::precondition naming the first violated invariant.
  void validate() const;

  double t1_us() const { return 1.0 / gamma1; }
  double visibility() const { return 1.0 - p_read_ge - p_read_eg; }
  double assignment_fidelity() const { return 1.0 - 0.5 * (p_read_ge + p_read_eg); }
  /// Inverse dephasing time in 1/us, zero when dephasing is disabled.
  double dephasing_rate() const { return t2_over_t1 > 0.0 ? gamma1 / t2_over_t1 : 0.0; }
};

/// Durations of the hardware atomics that make up every shot.
struct SimTiming {
  Nanos pulse = 40;
  Nanos readout = 1'000;
  Nanos feedback = 1'000;  ///< conditional-pulse latency of one active-reset round
  Nanos passive_reset = 48'000;
  Nanos clifford = 75;     ///< mean single-qubit Clifford duration
  Nanos spec_drive = 10'000;

  Nanos reset_round() const { return readout + feedback; }
};

struct IqClassStats {
  double i = 0.0;
  double q = 0.0;
  double var = 0.0;  ///< radial variance
};

struct IqStats {
  std::array<IqClassStats, 2> cls{};
};

/// The controller's belief about the qubit.
struct CalibrationState {
  double f_drive = 0.0;
  double a_pi = 0.5;
  double a_pi2 = 0.25;
  double ro_detuning = 0.0;
  double ro_amp = 0.7;
  std::optional<IqStats> iq;

  void validate() const;
  friend bool operator==(const CalibrationState& a, const CalibrationState& b) {
    return a.f_drive == b.f_drive && a.a_pi == b.a_pi && a.a_pi2 == b.a_pi2 &&
           a.ro_detuning == b.ro_detuning && a.ro_amp == b.ro_amp &&
           a.iq.has_value() == b.iq.has_value();
  }
};

/// Monotone simulated wall clock with a per-phase ledger.
class SimClock {
 public:
  Nanos now() const { return now_; }
  const TimingBudget& ledger() const { return ledger_; }
  Nanos idle() const { return idle_; }

  void advance(Phase phase, Nanos dt);
  void wait(Nanos dt);

 private:
  Nanos now_ = 0;
  Nanos idle_ = 0;
  TimingBudget ledger_{};
};

struct IqSample {
  double i = 0.0;
  double q = 0.0;
  int prepared_state = 0;
  Nanos t_stamp = 0;
};

/// Offset/amplitude pair of a response curve, P = C + A * shape.
struct Spam {
  double amplitude;
  double offset;
};

double decay_signal(Spam spam, double rate, double t);
double cosine_signal(Spam spam, double argument);

/// SPAM of the T1 decay: A = p_prep1 * visibility, C = p_read_eg + floor.
Spam decay_spam(const DeviceTruth& truth);
/// SPAM of oscillating responses (Ramsey, pulse trains): A = visibility / 2.
Spam oscillation_spam(const DeviceTruth& truth);
/// SPAM of randomized-benchmarking survival (ground-state readout).
Spam survival_spam(const DeviceTruth& truth);

double p1_after_delay(const DeviceTruth& truth, double tau_us);
/// Excited population after n pi pulses at amplitude a_pi * amp_scale. An
/// exact odd-length train returns C + A; the cosine carries a pi offset.
double p1_pi_train(const DeviceTruth& truth, const CalibrationState& state, int n_pulses,
                   double amp_scale, Nanos pulse);
/// Same for n back-to-back pairs of pi/2 pulses.
double p1_pi_half_pairs(const DeviceTruth& truth, const CalibrationState& state, int n_pairs,
                        double amp_scale, Nanos pulse);
double p1_ramsey(const DeviceTruth& truth, const CalibrationState& state, double detuning_mhz,
                 double tau_us);
double p1_spectroscopy(const DeviceTruth& truth, double drive_offset_mhz);

/// Average Clifford infidelity from coherence, drive detuning and amplitude errors.
double clifford_error(const DeviceTruth& truth, const CalibrationState& state, Nanos clifford);
double crb_decay_base(const DeviceTruth& truth, const CalibrationState& state, Nanos clifford);
double crb_survival(const DeviceTruth& truth, const CalibrationState& state, std::int64_t m,
                    Nanos clifford);

/// Integrated IQ centroid for qubit state k at the given readout settings.
std::complex<double> readout_centroid(const DeviceTruth& truth, double ro_detuning, double ro_amp,
                                      int state);

std::int64_t sample_shots(double p, std::int64_t shots, Rng& rng);
std::vector<IqSample> sample_iq(const DeviceTruth& truth, double ro_detuning, double ro_amp,
                                int prepared_state, std::int64_t shots, Rng& rng,
                                Nanos t_stamp = 0);

}  // namespace sparsecal
