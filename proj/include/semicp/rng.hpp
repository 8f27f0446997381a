#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace semicp {

/// Stateless 64-bit avalanche mix (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of replica `replica_index` under `master_seed`:
///   mix64(mix64(master_seed) ^ mix64(replica_index + 0x632BE59BD9B4E019))
constexpr std::uint64_t derive_seed(std::uint64_t master_seed,
                                    std::uint64_t replica_index) noexcept {
  return mix64(mix64(master_seed) ^ mix64(replica_index + 0x632BE59BD9B4E019ULL));
}

/// Reproducible per-replica random stream. The engine is mt19937_64 seeded
/// with `derive_seed`; uniforms are built from the top 53 bits so the draw
/// sequence does not depend on the standard library's distributions.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t replica_index)
      : master_seed_(master_seed),
        replica_index_(replica_index),
        engine_(derive_seed(master_seed, replica_index)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on (0, 1].
  double uniform_open_closed() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate, by inverse CDF on one (0,1] draw.
  double exponential(double rate) { return -std::log(uniform_open_closed()) / rate; }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t replica_index() const noexcept { return replica_index_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t replica_index_;
  std::mt19937_64 engine_;
};

/// Stream for replica `replica_index` of an experiment seeded by `master_seed`.
inline RngStream rng_stream(std::uint64_t master_seed, std::uint64_t replica_index) {
  return RngStream(master_seed, replica_index);
}

}  // namespace semicp
