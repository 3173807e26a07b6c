#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "curricula/common.hpp"

namespace curricula {

// splitmix64; used for seeding and seed derivation.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

// xoshiro256** seeded via splitmix64. Self-contained so that streams are
// bit-identical across platforms and standard libraries; std::*_distribution
// is unspecified and must not be used anywhere seeds matter.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() {
    auto rotl = [](std::uint64_t x, int k) {
      return (x << k) | (x >> (64 - k));
    };
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Unbiased draw from [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound < 2) return 0;
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  double unit() {  // [0, 1) with 53 random bits
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

// Derives an independent substream seed from (seed, label) or (seed, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  SplitMix64 sm{seed ^ fnv1a(label)};
  return sm.next();
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 sm{seed ^ (0x9e3779b97f4a7c15ull + index)};
  sm.next();
  return sm.next();
}

// Floyd's algorithm: k distinct values from [0, n), k <= n. Output order is
// the insertion order of the algorithm (deterministic for a given rng state).
inline std::vector<std::uint64_t> sample_distinct(Rng& rng, std::uint64_t n,
                                                  std::uint64_t k) {
  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (std::uint64_t i = n - k; i < n; ++i) {
    std::uint64_t j = rng.below(i + 1);
    bool seen = false;
    for (std::uint64_t v : out) {
      if (v == j) {
        seen = true;
        break;
      }
    }
    out.push_back(seen ? i : j);
  }
  return out;
}

}  // namespace curricula
