#include "sparsecal/drift.hpp"

#include <cmath>
#include <string>

#include "sparsecal/error.hpp"

namespace sparsecal {

TelegraphProcess::TelegraphProcess(double low, double high, double rate_lh, double rate_hl,
                                   bool start_high)
    : low_level_(low), high_level_(high), rate_lh_(rate_lh), rate_hl_(rate_hl), high_(start_high) {
  require(rate_lh > 0.0 && rate_hl > 0.0, "telegraph rates must be > 0");
}

double TelegraphProcess::step(double dt, Rng& rng) {
  require(dt > 0.0, "step must be > 0");
  const double rate = high_ ? rate_hl_ : rate_lh_;
  if (rng.bernoulli(-std::expm1(-rate * dt))) high_ = !high_;
  return value();
}

GaussMarkovProcess::GaussMarkovProcess(double mean, double stddev, double tau_c)
    : GaussMarkovProcess(mean, stddev, tau_c, mean) {}

GaussMarkovProcess::GaussMarkovProcess(double mean, double stddev, double tau_c, double initial)
    : mean_(mean), stddev_(stddev), tau_c_(tau_c), value_(initial) {
  require(stddev >= 0.0, "Gauss-Markov stddev must be >= 0");
  require(tau_c > 0.0, "Gauss-Markov correlation time must be > 0");
}

double GaussMarkovProcess::step(double dt, Rng& rng) {
  require(dt > 0.0, "step must be > 0");
  const double decay = std::exp(-dt / tau_c_);
  const double kick = stddev_ * std::sqrt(-std::expm1(-2.0 * dt / tau_c_));
  value_ = mean_ + (value_ - mean_) * decay + kick * rng.normal();
  return value_;
}

FlickerProcess::FlickerProcess(double per_octave_stddev, double tau_min, int n_octaves) {
  require(n_octaves >= 3, "flicker synthesis needs at least three octaves");
  require(tau_min > 0.0, "flicker correlation time must be > 0");
  double tau = tau_min;
  for (int k = 0; k < n_octaves; ++k, tau *= 10.0) {
    octaves_.emplace_back(0.0, per_octave_stddev, tau);
  }
}

double FlickerProcess::value() const {
  double v = 0.0;
  for (const auto& o : octaves_) v += o.value();
  return v;
}

double FlickerProcess::step(double dt, Rng& rng) {
  for (auto& o : octaves_) o.step(dt, rng);
  return value();
}

WhiteProcess::WhiteProcess(double stddev) : stddev_(stddev) {
  require(stddev >= 0.0, "white-noise stddev must be >= 0");
}

double WhiteProcess::step(double dt, Rng& rng) {
  require(dt > 0.0, "step must be > 0");
  value_ = stddev_ * rng.normal();
  return value_;
}

double value(const Process& p) {
  return std::visit([](const auto& proc) { return proc.value(); }, p);
}

double step(Process& p, double dt, Rng& rng) {
  return std::visit([&](auto& proc) { return proc.step(dt, rng); }, p);
}

std::string_view to_string(DriftField f) {
  switch (f) {
    case DriftField::gamma1: return "gamma1";
    case DriftField::f01: return "f01";
    case DriftField::rabi_per_amp: return "rabi_per_amp";
  }
  return "?";
}

DriftField drift_field_from_string(std::string_view name) {
  if (name == "gamma1") return DriftField::gamma1;
  if (name == "f01") return DriftField::f01;
  if (name == "rabi_per_amp") return DriftField::rabi_per_amp;
  fail(Errc::config, "unknown drift field '" + std::string(name) + "'");
}

DriftSchedule::DriftSchedule(DeviceTruth nominal, double dt, Rng rng)
    : nominal_(nominal), dt_(dt), rng_(rng) {
  require(dt > 0.0, "drift step must be > 0");
}

void DriftSchedule::bind(DriftField field, Process process) {
  require(steps_ == 0, "bind processes before the first query");
  bindings_[field].push_back(std::move(process));
}

void DriftSchedule::advance_to(double t) {
  if (t < last_query_) fail(Errc::time_reversal, "drift schedule queried backwards in time");
  last_query_ = t;
  const auto target = static_cast<long long>(std::floor(t / dt_ + 1e-9));
  for (; steps_ < target; ++steps_) {
    for (auto& [field, procs] : bindings_) {
      for (auto& p : procs) step(p, dt_, rng_);
    }
  }
}

double DriftSchedule::current(DriftField field) const {
  double base = 0.0;
  switch (field) {
    case DriftField::gamma1: base = nominal_.gamma1; break;
    case DriftField::f01: base = nominal_.f01; break;
    case DriftField::rabi_per_amp: base = nominal_.rabi_per_amp; break;
  }
  const auto it = bindings_.find(field);
  if (it == bindings_.end()) return base;
  for (const auto& p : it->second) base += value(p);
  return base;
}

double DriftSchedule::value_at(DriftField field, double t) {
  advance_to(t);
  return current(field);
}

DeviceTruth DriftSchedule::truth_at(double t) {
  advance_to(t);
  DeviceTruth truth = nominal_;
  truth.gamma1 = current(DriftField::gamma1);
  truth.f01 = current(DriftField::f01);
  truth.rabi_per_amp = current(DriftField::rabi_per_amp);
  if (!(truth.gamma1 > 0.0)) fail(Errc::precondition, "drifted gamma1 left the physical range");
  return truth;
}

}  // namespace sparsecal
