#pragma once

#include <cstdint>
#include <limits>

namespace raest {

/// SplitMix64 engine. Satisfies UniformRandomBitGenerator, so it plugs into
/// the standard distributions.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Seed of an independent substream, a hash of (seed, stream, index).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  SplitMix64 a(seed ^ (stream * 0xD1B54A32D192ED03ULL));
  const std::uint64_t base = a();
  SplitMix64 b(base + index * 0x9E3779B97F4A7C15ULL);
  b();
  return b();
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(SplitMix64& engine) noexcept {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace raest
