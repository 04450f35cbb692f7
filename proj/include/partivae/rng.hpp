#pragma once

#include <cstdint>

namespace partivae {

// Counter-based splittable RNG (SplitMix64 finalizer over key + i*gamma).
//
// Every random number in the artifact derives from a single 64-bit seed
// through this scheme:
//   value(i)   = mix64(key + (i+1) * GAMMA)        -- the i-th draw of a stream
//   split(tag) = stream keyed by mix64(key ^ mix64(tag + GAMMA))
// Splits are position-independent, so independent components (per-D sweep
// runs, init vs. training vs. evaluation noise) get reproducible streams
// regardless of how much randomness the others consumed.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  // Uniform draw strictly inside (0,1): ((x >> 11) + 0.5) / 2^53.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n), n > 0.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  SplitMix split(std::uint64_t tag) const {
    return SplitMix(mix64(key_ ^ mix64(tag + kGamma)));
  }

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Fixed stream tags used by the run orchestration (documented in README).
namespace stream {
inline constexpr std::uint64_t kDecoderInit = 1;
inline constexpr std::uint64_t kEncoderInit = 2;
inline constexpr std::uint64_t kTrainNoise = 3;
inline constexpr std::uint64_t kEvalNoise = 4;
inline constexpr std::uint64_t kSampleNoise = 5;
inline constexpr std::uint64_t kMcmc = 6;
inline constexpr std::uint64_t kSynthetic = 7;
}  // namespace stream

}  // namespace partivae
