#pragma once

#include <cmath>
#include <cstdint>

namespace sparsecal {

/// Simulated durations are integer nanoseconds so that ledgers add exactly.
using Nanos = std::int64_t;

constexpr Nanos kNanosPerMicro = 1'000;
constexpr Nanos kNanosPerMilli = 1'000'000;

inline Nanos from_us(double us) { return static_cast<Nanos>(std::llround(us * 1e3)); }
inline Nanos from_ms(double ms) { return static_cast<Nanos>(std::llround(ms * 1e6)); }
inline Nanos from_s(double s) { return static_cast<Nanos>(std::llround(s * 1e9)); }
constexpr double to_us(Nanos t) { return static_cast<double>(t) * 1e-3; }
constexpr double to_ms(Nanos t) { return static_cast<double>(t) * 1e-6; }
constexpr double to_s(Nanos t) { return static_cast<double>(t) * 1e-9; }

enum class Phase { seq, meas, reset, analysis, ping };

/// Time-to-decision decomposition: pulse sequence, measurement, qubit reset,
/// classical analysis and network round trips.
struct TimingBudget {
  Nanos seq = 0;
  Nanos meas = 0;
  Nanos reset = 0;
  Nanos analysis = 0;
  Nanos ping = 0;

  constexpr Nanos total() const { return seq + meas + reset + analysis + ping; }
  constexpr double total_ms() const { return to_ms(total()); }

  constexpr Nanos& operator[](Phase p) {
    switch (p) {
      case Phase::seq: return seq;
      case Phase::meas: return meas;
      case Phase::reset: return reset;
      case Phase::analysis: return analysis;
      case Phase::ping: break;
    }
    return ping;
  }

  constexpr TimingBudget& operator+=(const TimingBudget& o) {
    seq += o.seq;
    meas += o.meas;
    reset += o.reset;
    analysis += o.analysis;
    ping += o.ping;
    return *this;
  }
  friend constexpr TimingBudget operator+(TimingBudget a, const TimingBudget& b) { return a += b; }
  friend constexpr TimingBudget operator-(TimingBudget a, const TimingBudget& b) {
    a.seq -= b.seq;
    a.meas -= b.meas;
    a.reset -= b.reset;
    a.analysis -= b.analysis;
    a.ping -= b.ping;
    return a;
  }
  friend constexpr bool operator==(const TimingBudget&, const TimingBudget&) = default;
};

enum class LatencyMode { on_controller, offloading };

/// Where decisions are computed. Offloading pays one network round trip per
/// decision; on-controller execution never does.
struct LatencyModel {
  LatencyMode mode = LatencyMode::on_controller;
  Nanos rtt = 0;
  Nanos analysis_time = kNanosPerMicro;

  static LatencyModel on_controller(Nanos analysis = kNanosPerMicro) {
    return {LatencyMode::on_controller, 0, analysis};
  }
  static LatencyModel offloading(Nanos rtt, Nanos analysis = kNanosPerMicro) {
    return {LatencyMode::offloading, rtt, analysis};
  }

  Nanos effective_rtt() const { return mode == LatencyMode::on_controller ? 0 : rtt; }
};

/// Adds per-decision analysis time and round trips to the measured parts.
TimingBudget account(TimingBudget parts, const LatencyModel& latency, std::int64_t n_decisions);

}  // namespace sparsecal
