#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rbl {

/// splitmix64 finalizer; bijective 64-bit mixing.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a master seed and an ordered key path, e.g.
/// derive_seed(master, {sweep, trial}). Distinct paths give decorrelated seeds.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// Independent random stream owned by one unit of work (one trial, one restart).
/// Not shared across threads; copy or derive instead.
class SeedStream {
public:
  explicit SeedStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (stddev == 0.0) return mean;
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  std::uint64_t next() { return engine_(); }

  /// Child stream keyed by `key`, independent of how much of this stream was consumed.
  SeedStream child(std::uint64_t key) const { return SeedStream(derive_seed(seed_, {key})); }

  std::mt19937_64& engine() noexcept { return engine_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

} // namespace rbl
