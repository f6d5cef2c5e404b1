#pragma once

#include <cstdint>
#include <limits>

namespace clusterpdc {

/// SplitMix64 generator. Cheap to seed, so every pulse and every dark-count
/// channel gets its own independent substream derived from (seed, stream, index).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Substream seed for (seed, stream id, index); distinct inputs give
/// decorrelated states.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  SplitMix64 mix(seed ^ (stream * 0xd1b54a32d192ed03ULL));
  std::uint64_t a = mix();
  SplitMix64 mix2(a ^ (index * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
  mix2();
  return mix2();
}

}  // namespace clusterpdc
