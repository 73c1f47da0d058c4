#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace dactor {

/// SplitMix64 run in counter mode.
///
/// Output n of a stream with key k is mix(k + (n + 1) * 0x9E3779B97F4A7C15), where
/// mix is the SplitMix64 finalizer. The generator therefore has no hidden state
/// beyond (key, counter), produces the same sequence on every platform, and
/// supports cheap derivation of independent named streams from one master seed:
///
///     key(stream) = mix(master_seed ^ mix(fnv1a64(stream_name)))
///
/// Normal deviates use the Marsaglia polar method (sqrt and log only).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) : key_(key) {}

  /// Independent stream derived from a master seed and a stream name.
  static Rng stream(std::uint64_t master_seed, std::string_view name);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n); n must be positive. Lemire's multiply-shift with rejection.
  std::uint64_t uniform_index(std::uint64_t n);

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  // UniformRandomBitGenerator interface.
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }
  result_type operator()() { return next_u64(); }

  bool operator==(const Rng&) const = default;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace dactor
