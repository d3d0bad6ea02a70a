#include "sparsecal/error.hpp"

namespace sparsecal {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::precondition: return "precondition";
    case Errc::degenerate_denominator: return "degenerate_denominator";
    case Errc::out_of_capture_range: return "out_of_capture_range";
    case Errc::no_contrast: return "no_contrast";
    case Errc::too_many_invalid_replicates: return "too_many_invalid_replicates";
    case Errc::capture_failure: return "capture_failure";
    case Errc::fit_failure: return "fit_failure";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::zero_variance: return "zero_variance";
    case Errc::untrained: return "untrained";
    case Errc::time_reversal: return "time_reversal";
    case Errc::config: return "config";
    case Errc::schema: return "schema";
  }
  return "unknown";
}

}  // namespace sparsecal
