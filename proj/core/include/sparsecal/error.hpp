#pragma once

#include <stdexcept>
#include <string>

namespace sparsecal {

enum class Errc {
  precondition,
  degenerate_denominator,
  out_of_capture_range,
  no_contrast,
  too_many_invalid_replicates,
  capture_failure,
  fit_failure,
  insufficient_data,
  zero_variance,
  untrained,
  time_reversal,
  config,
  schema,
};

const char* to_string(Errc code) noexcept;

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code; callers branch on code(), never on the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const char* what) {
  if (!cond) fail(Errc::precondition, what);
}

}  // namespace sparsecal
