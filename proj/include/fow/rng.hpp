#pragma once

#include <cmath>
#include <cstdint>

namespace fow {

// ---------------------------------------------------------------------------
// Counter-based splittable random stream.
//
// Output i is a pure function of (key, i): the stream keeps no evolving
// state beyond the counter, and child streams derive a fresh key from
// (parent key, index). That makes per-day / per-event substreams cheap and
// order-independent, so generating days [0,60) yields bitwise the same
// events as generating [0,30) and [30,60) separately.
//
// The mixer is the 64-bit finalizer from splitmix64, which is also how the
// sequential generator of the same name produces its output, so the
// statistical quality matches it. std::* distributions are deliberately not
// used anywhere: their sequences are implementation-defined, and every draw
// here must be reproducible across platforms.
// ---------------------------------------------------------------------------
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  // Root stream for a user-facing seed.
  static RngStream seeded(std::uint64_t seed) {
    return RngStream(mix64(seed ^ kSeedTag));
  }

  // Child stream with an independent key. Derivation depends only on
  // (key, index), never on how many draws were taken from this stream.
  [[nodiscard]] RngStream split(std::uint64_t index) const {
    return RngStream(mix64((key_ ^ kSplitTag) + (index + 1) * kGamma));
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Inverse-CDF exponential; log1p keeps small quantiles exact.
  double exponential(double rate) {
    return -std::log1p(-next_double()) / rate;
  }

  // Inverse-CDF Weibull with shape k and scale lambda.
  double weibull(double shape, double scale) {
    return scale * std::pow(-std::log1p(-next_double()), 1.0 / shape);
  }

  // Box-Muller standard normal (cosine branch; one draw per call pair).
  double normal() {
    const double u1 = next_double();
    const double u2 = next_double();
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(kTwoPi * u2);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kSeedTag = 0x5AFE5EEDCAFEF00Dull;
  static constexpr std::uint64_t kSplitTag = 0xD1B54A32D192ED03ull;

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fow
