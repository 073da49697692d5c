#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovl/rng.hpp"

namespace ovl {

// Per-slot i.i.d. packet-count distribution with bounded support.
// Used for both link capacities and external arrivals.
struct CountDist {
  enum class Kind { Deterministic, Bernoulli };

  Kind kind = Kind::Deterministic;
  int value = 0;   // deterministic value
  int n = 0;       // bernoulli trial count
  double p = 0.0;  // bernoulli success probability

  static CountDist deterministic(int v) {
    CountDist d;
    d.kind = Kind::Deterministic;
    d.value = v;
    return d;
  }

  static CountDist bernoulli(int n, double p) {
    CountDist d;
    d.kind = Kind::Bernoulli;
    d.n = n;
    d.p = p;
    return d;
  }

  int max() const { return kind == Kind::Deterministic ? value : n; }

  double mean() const {
    return kind == Kind::Deterministic ? static_cast<double>(value) : n * p;
  }

  int sample(Rng& rng) const {
    return kind == Kind::Deterministic ? value : rng.binomial(n, p);
  }

  // pmf over 0..max(); consumed by the enumeration oracle
  std::vector<double> pmf() const {
    if (kind == Kind::Deterministic) {
      std::vector<double> out(value + 1, 0.0);
      out[value] = 1.0;
      return out;
    }
    std::vector<double> out(n + 1, 0.0);
    // binomial coefficients by recurrence
    double coeff = 1.0;
    for (int k = 0; k <= n; k++) {
      out[k] = coeff * std::pow(p, k) * std::pow(1.0 - p, n - k);
      coeff = coeff * (n - k) / (k + 1);
    }
    return out;
  }

  std::string describe() const {
    if (kind == Kind::Deterministic) return "deterministic(" + std::to_string(value) + ")";
    return "bernoulli(" + std::to_string(n) + "," + std::to_string(p) + ")";
  }

  bool valid() const {
    if (kind == Kind::Deterministic) return value >= 0;
    return n >= 0 && p >= 0.0 && p <= 1.0;
  }
};

}  // namespace ovl
