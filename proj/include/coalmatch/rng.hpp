#pragma once

#include <cmath>
#include <cstdint>

namespace coalmatch {

// Counter-based generator: every draw is a pure function of (key, counter),
// so parallel consumers can pull from disjoint substreams and reproduce the
// same numbers regardless of evaluation order or thread count.
//
// The mixer is the SplitMix64 finalizer, applied to key ^ golden-ratio
// increments of the counter.
class Rng {
public:
  explicit Rng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  // Derives an unrelated stream; used to split "seed -> simulation ->
  // replicate" hierarchies.
  static Rng substream(std::uint64_t key, std::uint64_t stream) {
    return Rng(mix(key ^ mix(stream + 0x9e3779b97f4a7c15ull)));
  }

  Rng split(std::uint64_t stream) const { return substream(key_, stream); }

  std::uint64_t next_u64() { return at(counter_++); }

  // Stateless access: the n-th value of this stream.
  std::uint64_t at(std::uint64_t counter) const {
    return mix(key_ + (counter + 1) * 0x9e3779b97f4a7c15ull);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return to_unit(next_u64()); }
  double uniform_at(std::uint64_t counter) const { return to_unit(at(counter)); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n); n must be positive. Modulo bias is negligible for the
  // population sizes used here.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Box-Muller from two consecutive counters, so normal_at(2k) is independent
  // of every other even-counter draw.
  double normal() {
    double z = normal_at(counter_);
    counter_ += 2;
    return z;
  }

  double normal_at(std::uint64_t counter) const {
    double u1 = to_unit(at(counter));
    double u2 = to_unit(at(counter + 1));
    if (u1 <= 0) u1 = 5e-324;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double lognormal(double mu, double sigma) {
    return std::exp(mu + sigma * normal());
  }

  std::uint64_t key() const { return key_; }

private:
  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }

  static double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace coalmatch
