#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsecal/device.hpp"
#include "sparsecal/drift.hpp"
#include "sparsecal/primitives.hpp"
#include "sparsecal/timing.hpp"

namespace sparsecal {

struct CampaignConfig {
  DeviceTruth device{};
  LabConfig lab{};
  std::vector<std::pair<DriftField, Process>> drift;
  double drift_dt_s = 0.01;
  CalibrationState initial_state{};
  int initial_passes = 3;  ///< Ramsey + pi + pi/2 rounds before the first cycle
  double t1_guess_us = 20.0;
  T1Options t1{};
  RamseyOptions ramsey{};
  TrainOptions pi{};
  TrainOptions pi2{};
  CrbOptions crb{};
  Nanos cadence = 290 * kNanosPerMilli;
  std::uint64_t seed = 1;
};

/// Default drift: telegraph T1, Gauss-Markov frequency, slow Rabi-rate drift.
std::vector<std::pair<DriftField, Process>> default_drift(const DeviceTruth& nominal);

enum class Step { crb_a, ramsey, pi, pi2, t1, crb_b };
inline constexpr int kSteps = 6;
const char* to_string(Step s);

struct CycleRecord {
  std::int64_t index = 0;
  double t_start_ms = 0.0;  ///< since the start of the first cycle
  double duration_ms = 0.0;
  bool overrun = false;
  std::optional<double> eps_a;
  std::optional<double> eps_b;
  std::optional<double> gamma1_hat;   ///< 1/us
  std::optional<double> delta_f_hat;  ///< drive frequency minus its initial value, MHz
  double a_pi = 0.0;
  double a_pi2 = 0.0;
  /// failed[s] marks a primitive whose value was carried forward.
  std::array<bool, kSteps> failed{};
  std::array<TimingBudget, kSteps> budgets{};
  // Ground truth at the start of the cycle, and model infidelities of the
  // static and live states at the respective CRB runs.
  double true_gamma1 = 0.0;
  double true_f01 = 0.0;
  double true_rabi = 0.0;
  double true_eps_a = 0.0;
  double true_eps_b = 0.0;
};

class Campaign {
 public:
  explicit Campaign(const CampaignConfig& config);

  CycleRecord run_cycle();

  const CalibrationState& static_state() const { return static_; }
  const CalibrationState& live_state() const { return live_; }
  const CalibrationState& initial_state() const { return initial_; }
  Lab& lab() { return *lab_; }
  std::int64_t cycles() const { return cycles_; }
  Nanos origin() const { return origin_; }

 private:
  template <class Fn>
  bool step(CycleRecord& rec, Step s, Fn&& fn);
  void initial_calibration();

  CampaignConfig config_;
  std::shared_ptr<DriftSchedule> drift_;
  std::unique_ptr<Lab> lab_;
  CalibrationState initial_;
  CalibrationState static_;
  CalibrationState live_;
  std::int64_t cycles_ = 0;
  Nanos origin_ = 0;
  std::optional<double> eps_a_, eps_b_, gamma1_, delta_f_;
};

struct CampaignSummary {
  std::int64_t cycles = 0;
  double mean_eps_a = 0.0;
  double mean_eps_b = 0.0;
  double reduction_pct = 0.0;  ///< 100 (eps_a - eps_b) / eps_a over cycles with both values
  std::int64_t overruns = 0;
  std::int64_t failures = 0;
  double sim_time_s = 0.0;
};

CampaignSummary summarize(const std::vector<CycleRecord>& records);

/// Runs n cycles, handing each record to `sink` as it completes.
CampaignSummary run_campaign(const CampaignConfig& config, std::int64_t n_cycles,
                             const std::function<void(const CycleRecord&)>& sink = {});

}  // namespace sparsecal
