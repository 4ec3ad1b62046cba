#pragma once

#include <cstdint>

namespace rotec {

/// SplitMix64 (Steele, Lea, Flood 2014). 64-bit state; uniform doubles use the
/// top 53 bits. Streams for (seed, task) pairs come from split().
class SplitMix64 {
 public:
  static constexpr const char* kName = "splitmix64";

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Independent child stream keyed by `stream`; does not advance this one.
  SplitMix64 split(std::uint64_t stream) const {
    SplitMix64 mixer(state_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return SplitMix64(mixer.next());
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace rotec
