#ifndef FORRLAB_RNG_HPP
#define FORRLAB_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "forrlab/common.hpp"

namespace forrlab {

inline constexpr std::uint64_t kGolden64 = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer; bijective avalanche mix.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

struct SplitMix64 {
  std::uint64_t state;
  constexpr std::uint64_t next() {
    state += kGolden64;
    return mix64(state);
  }
};

// xoshiro256++ (Blackman/Vigna). Chosen over std engines so that streams are
// reproducible bit-for-bit independent of the standard library in use.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& w : s_) w = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = kGolden64;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_;
};

// Stable seed for stream (master, domain, index). Domains separate the
// sub-runs of an experiment, indices separate Monte Carlo trials, so results
// do not depend on worker count or on which sub-runs execute first.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::uint64_t domain,
                                           std::uint64_t index) {
  std::uint64_t h = mix64(master + kGolden64);
  h = mix64(h ^ mix64(domain + 0xbf58476d1ce4e5b9ull));
  h = mix64(h ^ mix64(index + 0x94d049bb133111ebull));
  return h;
}

// Uniform + Gaussian draws from one seeded xoshiro stream. Gaussians use the
// Marsaglia polar method (exact, no trig), with the spare value cached.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}
  RandomStream(std::uint64_t master, std::uint64_t domain, std::uint64_t index)
      : gen_(derive_seed(master, domain, index)) {}

  std::uint64_t bits() { return gen_.next(); }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform on {-1, +1}.
  double sign() { return (gen_.next() >> 63) ? -1.0 : 1.0; }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  Xoshiro256pp gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// A (master seed, domain) pair from which per-trial streams are derived.
// Samplers take a StreamFamily instead of a raw generator so trials can run
// on any number of workers with identical results.
struct StreamFamily {
  std::uint64_t master = 0;
  std::uint64_t domain = 0;

  RandomStream stream(std::uint64_t index) const {
    return RandomStream(master, domain, index);
  }
  StreamFamily child(std::string_view name) const {
    return StreamFamily{master, mix64(domain ^ fnv1a64(name))};
  }
  static StreamFamily root(std::uint64_t master, std::string_view name) {
    return StreamFamily{master, fnv1a64(name)};
  }
};

}  // namespace forrlab

#endif  // FORRLAB_RNG_HPP
