#pragma once

#include <cstdint>

namespace adamrl {

/// Counter-based splittable PRNG.
///
/// Output at position n is mix64(key + n * golden), the splitmix64 output
/// function, so a stream is a pure function of (key, counter): identical
/// seed plus identical call sequence reproduces the exact bit sequence.
/// split(id) derives a child key by double mixing, giving streams that are
/// statistically independent of the parent and of each other.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Child stream keyed by (this stream's key, id); does not advance *this.
  SplitRng split(std::uint64_t id) const {
    SplitRng child(0);
    child.key_ = mix64(key_ ^ mix64(id + kGolden));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  // splitmix64 finalizer (Steele, Lea, Flood 2014); bijective on uint64.
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace adamrl
