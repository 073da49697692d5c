#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace ovl {

// splitmix64 finalizer, used to derive independent stream seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mixSeed(std::uint64_t base, std::uint64_t tag) {
  return splitmix64(base ^ splitmix64(tag));
}

// Deterministic RNG stream. Draw helpers avoid std::*_distribution so the
// produced sequences do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  int binomial(int n, double p) {
    int k = 0;
    for (int i = 0; i < n; i++)
      if (bernoulli(p)) k++;
    return k;
  }

  // index into cumulative weights (non-decreasing, back() == 1 up to rounding)
  int categorical(std::span<const double> cum) {
    double u = uniform();
    for (std::size_t i = 0; i + 1 < cum.size(); i++)
      if (u < cum[i]) return static_cast<int>(i);
    return static_cast<int>(cum.size()) - 1;
  }

  // uniform integer in [0, n)
  int below(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ovl
