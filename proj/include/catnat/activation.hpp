#pragma once

#include <numbers>

namespace catnat {

enum class ActivationKind { Sigmoid, Natural };

// Per-node squashing function a : R -> [0, 1].
//
// The natural activation is a clipped sine centred at `shift` with support
// width `width`:
//   0                                  x <= C - A/2
//   (1 + sin(pi (x - C) / A)) / 2      inside the band
//   1                                  x >= C + A/2
// With C = 0 and A = 2*pi its slope at 0 equals the sigmoid's (1/4).
struct Activation {
  ActivationKind kind = ActivationKind::Sigmoid;
  double shift = 0.0;
  double width = 2.0 * std::numbers::pi;

  static Activation sigmoid() { return {ActivationKind::Sigmoid, 0.0, 2.0 * std::numbers::pi}; }
  static Activation natural(double shift = 0.0, double width = 2.0 * std::numbers::pi);

  [[nodiscard]] double eval(double x) const noexcept;
  [[nodiscard]] double grad(double x) const noexcept;
  // 1 - eval(x) without the cancellation when eval(x) is close to 1.
  [[nodiscard]] double complement(double x) const noexcept;
  // Inverse on the open interval (0, 1); saturates to the band edges for
  // the natural activation and to +-infinity for the sigmoid.
  [[nodiscard]] double inverse(double prob) const noexcept;
  // |x - C| <= A/2 for the natural activation; always true for the sigmoid.
  [[nodiscard]] bool in_band(double x) const noexcept;

  friend bool operator==(const Activation&, const Activation&) = default;
};

inline double activation_eval(const Activation& act, double x) noexcept { return act.eval(x); }
inline double activation_grad(const Activation& act, double x) noexcept { return act.grad(x); }

}  // namespace catnat
