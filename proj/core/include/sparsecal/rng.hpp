#pragma once

#include <cstdint>
#include <random>

namespace sparsecal {

/// Named sub-streams so that unrelated consumers of randomness never shift
/// each other's sequences.
enum class Stream : std::uint64_t {
  shots = 1,
  drift = 2,
  bootstrap = 3,
  landscape = 4,
};

/// Seedable random source. A (seed, stream) pair fully determines the sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
  Rng(std::uint64_t seed, Stream stream) : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  /// Independent child stream; does not advance this generator.
  Rng fork(std::uint64_t child) const;

  double uniform();
  double normal();
  bool bernoulli(double p);
  std::int64_t binomial(std::int64_t trials, double p);
  /// Failures before `successes` successes, each trial succeeding with probability p.
  std::int64_t negative_binomial(std::int64_t successes, double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace sparsecal
