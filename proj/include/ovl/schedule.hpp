#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ovl {

// Decaying step-size sequence for the layered controller.
//
// Power:       scale / (1+t)^exponent
// HarmonicLog: scale / ((t+2) * ln(t+2))
// Constant:    scale for all t (scale 0 freezes the layer)
struct StepSchedule {
  enum class Kind { Power, HarmonicLog, Constant };

  Kind kind = Kind::Power;
  double scale = 1.0;
  double exponent = 1.0;

  static StepSchedule power(double scale, double exponent) {
    return StepSchedule{Kind::Power, scale, exponent};
  }
  static StepSchedule harmonicLog(double scale) {
    return StepSchedule{Kind::HarmonicLog, scale, 1.0};
  }
  static StepSchedule constant(double v) { return StepSchedule{Kind::Constant, v, 0.0}; }
  static StepSchedule zero() { return constant(0.0); }

  double at(long long t) const {
    switch (kind) {
      case Kind::Power:
        return scale / std::pow(1.0 + static_cast<double>(t), exponent);
      case Kind::HarmonicLog: {
        double s = static_cast<double>(t) + 2.0;
        return scale / (s * std::log(s));
      }
      case Kind::Constant:
        return scale;
    }
    return 0.0;
  }

  bool isZero() const { return kind == Kind::Constant && scale == 0.0; }

  // Σ s_t = ∞ together with Σ s_t² < ∞, decided symbolically for this family.
  bool summableConditions() const {
    switch (kind) {
      case Kind::Power:
        return scale > 0.0 && exponent > 0.5 && exponent <= 1.0;
      case Kind::HarmonicLog:
        return scale > 0.0;
      case Kind::Constant:
        return false;
    }
    return false;
  }

  // Decay rank (exponent, log power): larger rank decays faster.
  // Power e -> (e, 0); HarmonicLog -> (1, 1).
  bool decaysStrictlyFasterThan(const StepSchedule& other) const {
    auto rank = [](const StepSchedule& s) {
      if (s.kind == Kind::HarmonicLog) return std::pair<double, int>{1.0, 1};
      return std::pair<double, int>{s.exponent, 0};
    };
    auto a = rank(*this), b = rank(other);
    return a.first > b.first || (a.first == b.first && a.second > b.second);
  }
};

// slow_t / fast_t -> 0. Zero schedules count as infinitely slow.
inline bool timescaleSeparated(const StepSchedule& fast, const StepSchedule& slow) {
  if (slow.isZero()) return true;
  if (fast.isZero()) return false;
  return slow.decaysStrictlyFasterThan(fast);
}

}  // namespace ovl
