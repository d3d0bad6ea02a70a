#include "sparsecal/device.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsecal/error.hpp"

namespace sparsecal {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

void DeviceTruth::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(Errc::precondition, std::string("device: ") + what);
  };
  check(gamma1 > 0.0, "gamma1 must be > 0");
  check(spec_linewidth > 0.0, "spec_linewidth must be > 0");
  check(kappa > 0.0, "kappa must be > 0");
  check(a_crit > 0.0, "a_crit must be > 0");
  check(iq_noise > 0.0, "iq_noise must be > 0");
  check(chi >= 0.0, "chi must be >= 0");
  check(is_probability(p_prep1) && p_prep1 >= 0.5, "p_prep1 must lie in [0.5, 1]");
  check(is_probability(p_read_eg), "p_read_eg must lie in [0, 1]");
  check(is_probability(p_read_ge), "p_read_ge must lie in [0, 1]");
  check(p_read_eg + p_read_ge < 1.0, "readout errors must leave positive visibility");
  check(is_probability(thermal_floor), "thermal_floor must lie in [0, 1]");
  check(is_probability(spec_background) && is_probability(spec_background + spec_height) &&
            spec_height >= 0.0,
        "spectroscopy background and height must keep the response in [0, 1]");
  check(c_coh >= 0.0 && c_det >= 0.0 && c_amp >= 0.0, "error-model coefficients must be >= 0");
}

void CalibrationState::validate() const {
  if (!(a_pi > 0.0)) fail(Errc::precondition, "state: a_pi must be > 0");
  if (!(a_pi2 > 0.0)) fail(Errc::precondition, "state: a_pi2 must be > 0");
  if (!(ro_amp >= 0.0)) fail(Errc::precondition, "state: ro_amp must be >= 0");
  if (iq && !(iq->cls[0].var > 0.0 && iq->cls[1].var > 0.0)) {
    fail(Errc::precondition, "state: trained IQ variances must be > 0");
  }
}

void SimClock::advance(Phase phase, Nanos dt) {
  require(dt >= 0, "clock cannot run backwards");
  now_ += dt;
  ledger_[phase] += dt;
}

void SimClock::wait(Nanos dt) {
  require(dt >= 0, "clock cannot run backwards");
  now_ += dt;
  idle_ += dt;
}

double decay_signal(Spam spam, double rate, double t) {
  return spam.offset + spam.amplitude * std::exp(-rate * t);
}

double cosine_signal(Spam spam, double argument) {
  return spam.offset + spam.amplitude * std::cos(argument);
}

Spam decay_spam(const DeviceTruth& truth) {
  return {truth.p_prep1 * truth.visibility(), truth.p_read_eg + truth.thermal_floor};
}

Spam oscillation_spam(const DeviceTruth& truth) {
  const double a = 0.5 * truth.visibility();
  return {a, truth.p_read_eg + a};
}

Spam survival_spam(const DeviceTruth& truth) {
  const double a = 0.5 * truth.visibility();
  return {a, truth.p_read_ge + a};
}

double p1_after_delay(const DeviceTruth& truth, double tau_us) {
  require(tau_us >= 0.0, "delay must be >= 0");
  return clamp01(decay_signal(decay_spam(truth), truth.gamma1, tau_us));
}

namespace {

double train_response(const DeviceTruth& truth, double total_angle, int n_pulses, Nanos pulse) {
  const double envelope = std::exp(-truth.dephasing_rate() * n_pulses * to_us(pulse));
  Spam spam = oscillation_spam(truth);
  spam.amplitude *= envelope;
  return clamp01(cosine_signal(spam, total_angle - kPi));
}

}  // namespace

double p1_pi_train(const DeviceTruth& truth, const CalibrationState& state, int n_pulses,
                   double amp_scale, Nanos pulse) {
  require(n_pulses >= 1, "pi train needs at least one pulse");
  require(amp_scale > 0.0, "amplitude scale must be > 0");
  const double alpha = truth.rabi_per_amp * state.a_pi * amp_scale;
  return train_response(truth, n_pulses * alpha, n_pulses, pulse);
}

double p1_pi_half_pairs(const DeviceTruth& truth, const CalibrationState& state, int n_pairs,
                        double amp_scale, Nanos pulse) {
  require(n_pairs >= 1, "pi/2 train needs at least one pair");
  require(amp_scale > 0.0, "amplitude scale must be > 0");
  const double beta = 2.0 * truth.rabi_per_amp * state.a_pi2 * amp_scale;
  return train_response(truth, n_pairs * beta, 2 * n_pairs, pulse);
}

double p1_ramsey(const DeviceTruth& truth, const CalibrationState& state, double detuning_mhz,
                 double tau_us) {
  require(tau_us > 0.0, "Ramsey delay must be > 0");
  const double offset = truth.f01 - state.f_drive;
  Spam spam = oscillation_spam(truth);
  spam.amplitude *= std::exp(-truth.dephasing_rate() * tau_us);
  return clamp01(cosine_signal(spam, 2.0 * kPi * (detuning_mhz - offset) * tau_us));
}

double p1_spectroscopy(const DeviceTruth& truth, double drive_offset_mhz) {
  const double g2 = truth.spec_linewidth * truth.spec_linewidth;
  const double d = drive_offset_mhz - truth.f01;
  return clamp01(truth.spec_background + truth.spec_height * g2 / (g2 + d * d));
}

double clifford_error(const DeviceTruth& truth, const CalibrationState& state, Nanos clifford) {
  const double t_cl = to_us(clifford);
  const double detuning = truth.f01 - state.f_drive;
  const double phase = 2.0 * kPi * detuning * t_cl;
  const double err_pi = truth.rabi_per_amp * state.a_pi - kPi;
  const double err_pi2 = truth.rabi_per_amp * state.a_pi2 - 0.5 * kPi;
  const double amp_sq = 0.5 * (err_pi * err_pi + err_pi2 * err_pi2);
  const double eps =
      truth.c_coh * t_cl * truth.gamma1 + truth.c_det * phase * phase + truth.c_amp * amp_sq;
  return std::clamp(eps, 0.0, 0.5);
}

double crb_decay_base(const DeviceTruth& truth, const CalibrationState& state, Nanos clifford) {
  return 1.0 - 2.0 * clifford_error(truth, state, clifford);
}

double crb_survival(const DeviceTruth& truth, const CalibrationState& state, std::int64_t m,
                    Nanos clifford) {
  require(m >= 0, "Clifford count must be >= 0");
  const double p = crb_decay_base(truth, state, clifford);
  const Spam spam = survival_spam(truth);
  return clamp01(spam.offset + spam.amplitude * std::pow(p, static_cast<double>(m)));
}

std::complex<double> readout_centroid(const DeviceTruth& truth, double ro_detuning, double ro_amp,
                                      int state) {
  const double half_kappa = 0.5 * truth.kappa;
  const double shift = state == 0 ? truth.chi : -truth.chi;
  const double penalty = std::exp(-(ro_amp / truth.a_crit) * (ro_amp / truth.a_crit));
  return ro_amp * penalty * half_kappa / std::complex<double>(half_kappa, ro_detuning - shift);
}

std::int64_t sample_shots(double p, std::int64_t shots, Rng& rng) {
  require(p >= 0.0 && p <= 1.0, "shot probability must lie in [0, 1]");
  require(shots >= 1, "need at least one shot");
  return rng.binomial(shots, p);
}

std::vector<IqSample> sample_iq(const DeviceTruth& truth, double ro_detuning, double ro_amp,
                                int prepared_state, std::int64_t shots, Rng& rng,
                                Nanos t_stamp) {
  require(shots >= 1, "need at least one shot");
  require(prepared_state == 0 || prepared_state == 1, "prepared state must be 0 or 1");
  const std::array<std::complex<double>, 2> mu{readout_centroid(truth, ro_detuning, ro_amp, 0),
                                               readout_centroid(truth, ro_detuning, ro_amp, 1)};
  std::vector<IqSample> out;
  out.reserve(static_cast<std::size_t>(shots));
  for (std::int64_t s = 0; s < shots; ++s) {
    int actual = prepared_state;
    if (prepared_state == 1 && !rng.bernoulli(truth.p_prep1)) actual = 0;
    const double i = mu[actual].real() + truth.iq_noise * rng.normal();
    const double q = mu[actual].imag() + truth.iq_noise * rng.normal();
    out.push_back({i, q, prepared_state, t_stamp});
  }
  return out;
}

}  // namespace sparsecal
