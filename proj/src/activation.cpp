#include "catnat/activation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "catnat/error.hpp"

namespace catnat {

Activation Activation::natural(double shift, double width) {
  if (!(width > 0.0) || !std::isfinite(width) || !std::isfinite(shift)) {
    throw Error(ErrorKind::InvalidArgument,
                "natural activation needs finite shift and width > 0, got width " + std::to_string(width));
  }
  return {ActivationKind::Natural, shift, width};
}

double Activation::eval(double x) const noexcept {
  if (kind == ActivationKind::Sigmoid) {
    // Branch on sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }
  const double half = 0.5 * width;
  if (x <= shift - half) return 0.0;
  if (x >= shift + half) return 1.0;
  // (1 + sin t) / 2 = sin^2(t/2 + pi/4); this form keeps a and 1 - a
  // accurate near both band edges.
  const double u = std::numbers::pi * (x - shift + half) / (2.0 * width);
  const double su = std::sin(u);
  return su * su;
}

double Activation::complement(double x) const noexcept {
  if (kind == ActivationKind::Sigmoid) return Activation::sigmoid().eval(-x);
  const double half = 0.5 * width;
  if (x <= shift - half) return 1.0;
  if (x >= shift + half) return 0.0;
  const double cu = std::cos(std::numbers::pi * (x - shift + half) / (2.0 * width));
  return cu * cu;
}

double Activation::grad(double x) const noexcept {
  if (kind == ActivationKind::Sigmoid) {
    return eval(x) * complement(x);
  }
  const double half = 0.5 * width;
  if (x <= shift - half || x >= shift + half) return 0.0;
  // cos t = 2 sin u cos u, with u as in eval.
  const double u = std::numbers::pi * (x - shift + half) / (2.0 * width);
  return std::numbers::pi / width * std::sin(u) * std::cos(u);
}

double Activation::inverse(double prob) const noexcept {
  if (kind == ActivationKind::Sigmoid) {
    if (prob <= 0.0) return -std::numeric_limits<double>::infinity();
    if (prob >= 1.0) return std::numeric_limits<double>::infinity();
    return std::log(prob) - std::log1p(-prob);
  }
  if (prob <= 0.0) return shift - 0.5 * width;
  if (prob >= 1.0) return shift + 0.5 * width;
  return shift + width / std::numbers::pi * std::asin(2.0 * prob - 1.0);
}

bool Activation::in_band(double x) const noexcept {
  return kind == ActivationKind::Sigmoid || std::abs(x - shift) <= 0.5 * width;
}

}  // namespace catnat
