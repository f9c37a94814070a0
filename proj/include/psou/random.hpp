#pragma once

#include <cstdint>
#include <random>

namespace psou {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of replication stream `index` derived from `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Caller-owned random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; all variates are generated here rather
/// than through <random> distributions so results are bit-reproducible across
/// standard library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Stream `index` of the family rooted at `master`.
  static RandomStream child(std::uint64_t master, std::uint64_t index) {
    return RandomStream(derive_seed(master, index));
  }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Exponential with density rate * exp(-rate x).
  double exponential(double rate);
  std::uint64_t poisson(double mean);
  /// Inverse Gaussian with the given mean and shape (Michael-Schucany-Haas).
  double inverse_gaussian(double mean, double shape);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace psou
