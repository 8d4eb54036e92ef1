#pragma once

#include <cmath>
#include <cstdint>
#include <iterator>

namespace scotti {

// Deterministic splitmix64 generator with hand-rolled distributions so that
// every stream is reproducible bit-for-bit, independent of the C++ runtime.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds; modulo bias is irrelevant at the ranges used here
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = uint64_t(hi - lo) + 1;
    return lo + int64_t(next_u64() % span);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // Fisher-Yates; std::shuffle is not guaranteed reproducible across runtimes.
  template <typename It>
  void shuffle(It first, It last) {
    auto n = std::distance(first, last);
    for (auto i = n - 1; i > 0; --i) {
      auto j = uniform_int(0, i);
      std::swap(*(first + i), *(first + j));
    }
  }

  // derive an independent stream from a parent seed and a salt
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t h = a ^ 0x9e3779b97f4a7c15ULL;
    h ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
  }

 private:
  uint64_t state_;
};

}  // namespace scotti
