#include "sparsecal/rng.hpp"

#include <algorithm>

namespace sparsecal {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

Rng Rng::fork(std::uint64_t child) const {
  // Mix the child index into the stream id; golden-ratio increment keeps
  // neighbouring children well separated in seed space.
  return Rng(seed_, stream_ * 0x9E3779B97F4A7C15ULL + child + 1);
}

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double Rng::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

bool Rng::bernoulli(double p) { return uniform() < p; }

std::int64_t Rng::binomial(std::int64_t trials, double p) {
  p = std::clamp(p, 0.0, 1.0);
  if (trials <= 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  return std::binomial_distribution<std::int64_t>(trials, p)(engine_);
}

std::int64_t Rng::negative_binomial(std::int64_t successes, double p) {
  p = std::clamp(p, 0.0, 1.0);
  if (successes <= 0 || p == 1.0) return 0;
  return std::negative_binomial_distribution<std::int64_t>(successes, p)(engine_);
}

}  // namespace sparsecal
