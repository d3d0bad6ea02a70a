#include "sparsecal/timing.hpp"

#include "sparsecal/error.hpp"

namespace sparsecal {

TimingBudget account(TimingBudget parts, const LatencyModel& latency, std::int64_t n_decisions) {
  require(n_decisions >= 0, "decision count must be >= 0");
  require(latency.rtt >= 0 && latency.analysis_time >= 0, "latencies must be >= 0");
  parts.analysis += n_decisions * latency.analysis_time;
  parts.ping += n_decisions * latency.effective_rtt();
  return parts;
}

}  // namespace sparsecal
