#pragma once

#include <map>
#include <string_view>
#include <variant>
#include <vector>

#include "sparsecal/device.hpp"
#include "sparsecal/rng.hpp"

namespace sparsecal {

/// Two-level random switching between `low` and `high` deviations.
class TelegraphProcess {
 public:
  TelegraphProcess(double low, double high, double rate_lh, double rate_hl, bool start_high = false);

  double value() const { return high_ ? high_level_ : low_level_; }
  bool is_high() const { return high_; }
  double step(double dt, Rng& rng);
  double correlation_time() const { return 1.0 / (rate_lh_ + rate_hl_); }
  double low() const { return low_level_; }
  double high() const { return high_level_; }
  double rate_lh() const { return rate_lh_; }
  double rate_hl() const { return rate_hl_; }

 private:
  double low_level_;
  double high_level_;
  double rate_lh_;
  double rate_hl_;
  bool high_;
};

/// First-order Gauss-Markov (Ornstein-Uhlenbeck) process, updated with the
/// exact AR(1) discretization so any dt yields the same path statistics.
class GaussMarkovProcess {
 public:
  GaussMarkovProcess(double mean, double stddev, double tau_c);
  GaussMarkovProcess(double mean, double stddev, double tau_c, double initial);

  double value() const { return value_; }
  double step(double dt, Rng& rng);
  double mean() const { return mean_; }
  double stddev() const { return stddev_; }
  double tau_c() const { return tau_c_; }

 private:
  double mean_;
  double stddev_;
  double tau_c_;
  double value_;
};

/// 1/f noise as a sum of Gauss-Markov octaves spaced a decade apart with
/// equal per-octave variance, which keeps the Allan deviation flat between
/// the shortest and longest correlation times.
class FlickerProcess {
 public:
  FlickerProcess(double per_octave_stddev, double tau_min, int n_octaves);

  double value() const;
  double step(double dt, Rng& rng);
  const std::vector<GaussMarkovProcess>& octaves() const { return octaves_; }

 private:
  std::vector<GaussMarkovProcess> octaves_;
};

/// Uncorrelated Gaussian deviation redrawn at every step.
class WhiteProcess {
 public:
  explicit WhiteProcess(double stddev);

  double value() const { return value_; }
  double step(double dt, Rng& rng);
  double stddev() const { return stddev_; }

 private:
  double stddev_;
  double value_ = 0.0;
};

using Process = std::variant<TelegraphProcess, GaussMarkovProcess, FlickerProcess, WhiteProcess>;

double value(const Process& p);
double step(Process& p, double dt, Rng& rng);

enum class DriftField { gamma1, f01, rabi_per_amp };

std::string_view to_string(DriftField f);
DriftField drift_field_from_string(std::string_view name);

/// Binds processes to DeviceTruth fields. All processes advance on a common
/// grid of width dt, so the realization depends only on the seed and never on
/// the times at which it is queried.
class DriftSchedule {
 public:
  DriftSchedule(DeviceTruth nominal, double dt, Rng rng);

  void bind(DriftField field, Process process);
  bool empty() const { return bindings_.empty(); }
  double dt() const { return dt_; }

  /// Nominal value plus the summed deviations of every bound process at t.
  /// Rejects queries earlier than the previous one.
  double value_at(DriftField field, double t);
  DeviceTruth truth_at(double t);

  const DeviceTruth& nominal() const { return nominal_; }

 private:
  void advance_to(double t);
  double current(DriftField field) const;

  DeviceTruth nominal_;
  double dt_;
  Rng rng_;
  std::map<DriftField, std::vector<Process>> bindings_;
  long long steps_ = 0;
  double last_query_ = 0.0;
};

}  // namespace sparsecal
