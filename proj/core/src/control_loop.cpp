#include "sparsecal/control_loop.hpp"

#include <algorithm>
#include <cmath>

#include "sparsecal/error.hpp"

namespace sparsecal {

std::vector<std::pair<DriftField, Process>> default_drift(const DeviceTruth& nominal) {
  // T1 hops between 14.5 us and 27.5 us with a 10 s correlation time.
  const double fast = 1.0 / 14.5 - nominal.gamma1;
  const double slow = 1.0 / 27.5 - nominal.gamma1;
  std::vector<std::pair<DriftField, Process>> d;
  d.emplace_back(DriftField::gamma1, TelegraphProcess(slow, fast, 0.05, 0.05));
  d.emplace_back(DriftField::f01, GaussMarkovProcess(0.0, 0.1, 20.0));
  d.emplace_back(DriftField::rabi_per_amp,
                 GaussMarkovProcess(0.0, 0.005 * nominal.rabi_per_amp, 1000.0));
  return d;
}

const char* to_string(Step s) {
  switch (s) {
    case Step::crb_a: return "crb_a";
    case Step::ramsey: return "ramsey";
    case Step::pi: return "pi";
    case Step::pi2: return "pi2";
    case Step::t1: return "t1";
    case Step::crb_b: return "crb_b";
  }
  return "?";
}

Campaign::Campaign(const CampaignConfig& config) : config_(config) {
  config_.device.validate();
  config_.initial_state.validate();
  require(config_.cadence > 0, "cadence must be > 0");
  require(config_.t1_guess_us > 0.0, "T1 guess must be > 0");
  drift_ = std::make_shared<DriftSchedule>(config_.device, config_.drift_dt_s,
                                           Rng(config_.seed, Stream::drift));
  for (const auto& [field, proc] : config_.drift) drift_->bind(field, proc);
  auto drift = drift_;
  lab_ = std::make_unique<Lab>([drift](Nanos t) { return drift->truth_at(to_s(t)); },
                               config_.lab, config_.seed);
  initial_calibration();
}

void Campaign::initial_calibration() {
  CalibrationState s = config_.initial_state;
  for (int k = 0; k < config_.initial_passes; ++k) {
    try {
      s = *calibrate_frequency_ramsey(*lab_, s, config_.ramsey).updated_state;
      s = *calibrate_pi(*lab_, s, config_.pi).updated_state;
      s = *calibrate_pi_half(*lab_, s, config_.pi2).updated_state;
    } catch (const Error&) {
      // Keep whatever the completed steps produced.
    }
  }
  initial_ = static_ = live_ = s;
  delta_f_ = 0.0;
  gamma1_ = 1.0 / config_.t1_guess_us;
  origin_ = lab_->clock().now();
}

template <class Fn>
bool Campaign::step(CycleRecord& rec, Step s, Fn&& fn) {
  const TimingBudget before = lab_->clock().ledger();
  bool ok = true;
  try {
    fn();
  } catch (const Error&) {
    ok = false;
  }
  rec.budgets[static_cast<int>(s)] = lab_->clock().ledger() - before;
  rec.failed[static_cast<int>(s)] = !ok;
  return ok;
}

CycleRecord Campaign::run_cycle() {
  CycleRecord rec;
  rec.index = cycles_;
  const Nanos start = lab_->clock().now();
  rec.t_start_ms = to_ms(start - origin_);
  const DeviceTruth t0 = lab_->truth();
  rec.true_gamma1 = t0.gamma1;
  rec.true_f01 = t0.f01;
  rec.true_rabi = t0.rabi_per_amp;
  const Nanos clifford = config_.lab.timing.clifford;

  rec.true_eps_a = clifford_error(lab_->truth(), static_, clifford);
  step(rec, Step::crb_a, [&] { eps_a_ = 1.0 - run_crb_ade(*lab_, static_, config_.crb).estimate.value; });
  step(rec, Step::ramsey, [&] {
    live_ = *calibrate_frequency_ramsey(*lab_, live_, config_.ramsey).updated_state;
    delta_f_ = live_.f_drive - initial_.f_drive;
  });
  step(rec, Step::pi, [&] { live_ = *calibrate_pi(*lab_, live_, config_.pi).updated_state; });
  step(rec, Step::pi2, [&] { live_ = *calibrate_pi_half(*lab_, live_, config_.pi2).updated_state; });
  step(rec, Step::t1, [&] {
    const double guess = std::clamp(1.0 / *gamma1_, 1.0, 1000.0);
    gamma1_ = estimate_t1(*lab_, guess, config_.t1).estimate.value;
  });
  rec.true_eps_b = clifford_error(lab_->truth(), live_, clifford);
  step(rec, Step::crb_b, [&] { eps_b_ = 1.0 - run_crb_ade(*lab_, live_, config_.crb).estimate.value; });

  rec.eps_a = eps_a_;
  rec.eps_b = eps_b_;
  rec.gamma1_hat = gamma1_;
  rec.delta_f_hat = delta_f_;
  rec.a_pi = live_.a_pi;
  rec.a_pi2 = live_.a_pi2;

  const Nanos used = lab_->clock().now() - start;
  rec.duration_ms = to_ms(used);
  if (used < config_.cadence) {
    lab_->clock().wait(config_.cadence - used);
  } else {
    rec.overrun = used > config_.cadence;
  }
  ++cycles_;
  return rec;
}

CampaignSummary summarize(const std::vector<CycleRecord>& records) {
  CampaignSummary s;
  s.cycles = static_cast<std::int64_t>(records.size());
  double sa = 0.0, sb = 0.0;
  std::int64_t paired = 0;
  for (const auto& r : records) {
    if (r.overrun) ++s.overruns;
    for (bool f : r.failed) s.failures += f ? 1 : 0;
    if (r.eps_a && r.eps_b) {
      sa += *r.eps_a;
      sb += *r.eps_b;
      ++paired;
    }
  }
  if (paired > 0) {
    s.mean_eps_a = sa / static_cast<double>(paired);
    s.mean_eps_b = sb / static_cast<double>(paired);
    if (s.mean_eps_a != 0.0) s.reduction_pct = 100.0 * (s.mean_eps_a - s.mean_eps_b) / s.mean_eps_a;
  }
  return s;
}

CampaignSummary run_campaign(const CampaignConfig& config, std::int64_t n_cycles,
                             const std::function<void(const CycleRecord&)>& sink) {
  require(n_cycles >= 0, "cycle count must be >= 0");
  std::vector<CycleRecord> records;
  records.reserve(static_cast<std::size_t>(n_cycles));
  if (n_cycles == 0) return summarize(records);
  Campaign c(config);
  for (std::int64_t i = 0; i < n_cycles; ++i) {
    records.push_back(c.run_cycle());
    if (sink) sink(records.back());
  }
  CampaignSummary s = summarize(records);
  s.sim_time_s = to_s(c.lab().clock().now() - c.origin());
  return s;
}

}  // namespace sparsecal
