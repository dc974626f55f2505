#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "catnat/param.hpp"

namespace catnat {

enum class Provenance { Analytic, Oracle };

// Fisher information over the scores: K x K for softmax, (K-1) x (K-1) for
// catnat.
struct FisherMatrix {
  Eigen::MatrixXd entries;
  Provenance provenance = Provenance::Analytic;

  [[nodiscard]] Eigen::Index size() const noexcept { return entries.rows(); }
  [[nodiscard]] double max_abs_off_diagonal() const;
  [[nodiscard]] double min_eigenvalue() const;
};

// Largest category count fim_oracle will enumerate.
inline constexpr std::size_t kOracleMaxCategories = std::size_t{1} << 16;

// Exact expectation sum_k p_k g_k g_k^T with g_k the analytic gradient of
// log p_k. Throws TooLarge above kOracleMaxCategories.
FisherMatrix fim_oracle(const ScoreVector& s, const Parameterization& param);

// diag(p) - p p^T.
FisherMatrix fim_softmax_analytic(const ScoreVector& s);

// Diagonal with G_ii = P(a_i) a'(s_i)^2 / (a_i (1 - a_i)). For the natural
// activation this is P(a_i) (pi/A)^2 in the closed band and 0 outside it.
FisherMatrix fim_catnat_analytic(const ScoreVector& s, const Activation& act, const TreeShape& shape);

FisherMatrix fim_analytic(const ScoreVector& s, const Parameterization& param);

inline constexpr double kDefaultDamping = 1e-8;
inline constexpr double kMaxCondition = 1e14;

struct NaturalGradient {
  Eigen::VectorXd direction;
  // Ratio of the largest to smallest eigenvalue of G + damping I.
  double condition = 1.0;
};

// Solves (G + damping I) x = grad. Diagonal matrices are inverted entrywise.
// Throws Singular when the condition estimate exceeds kMaxCondition, and
// ShapeMismatch when the sizes disagree.
NaturalGradient natural_gradient(const Eigen::VectorXd& grad, const FisherMatrix& G,
                                 double damping = kDefaultDamping);

struct KlCheck {
  double kl_exact = 0.0;
  double kl_quad = 0.0;
};

// KL(p(s) || p(s + ds)) against 1/2 ds^T G(s) ds. Throws ZeroSupport when
// p(s) has an exact zero.
KlCheck kl_quadratic_check(const ScoreVector& s, const ScoreVector& ds, const Parameterization& param);

}  // namespace catnat
