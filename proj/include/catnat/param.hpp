#pragma once

// Score-to-simplex maps: softmax over K scores and catnat over K - 1
// heap-ordered node scores, plus log-probabilities, their score gradients
// and exact samplers.

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <string_view>

#include "catnat/activation.hpp"
#include "catnat/random.hpp"
#include "catnat/tree.hpp"

namespace catnat {

using ScoreVector = Eigen::VectorXd;
using ProbabilityVector = Eigen::VectorXd;

// Clamp applied to node probabilities inside log and gradient paths only.
inline constexpr double kProbClamp = 1e-12;

struct NodeActivations {
  Eigen::VectorXd a;          // a_i = act(s_i), heap order
  Eigen::VectorXd path_prob;  // probability of descending from the root to node i
};

struct CatnatOutput {
  ProbabilityVector probs;
  NodeActivations nodes;
};

// Throws EmptyInput if fewer than two scores.
ProbabilityVector softmax_probs(const ScoreVector& s);
Eigen::VectorXd softmax_log_probs(const ScoreVector& s);
// Entry i is delta_ki - p_i.
Eigen::VectorXd softmax_grad_log_prob(const ScoreVector& s, std::size_t k);

NodeActivations catnat_nodes(const ScoreVector& s, const Activation& act, const TreeShape& shape);
// Throws ShapeMismatch unless s has K - 1 entries.
CatnatOutput catnat_probs(const ScoreVector& s, const Activation& act, const TreeShape& shape);
double catnat_log_prob(const ScoreVector& s, const Activation& act, const TreeShape& shape, std::size_t k);
Eigen::VectorXd catnat_log_probs(const ScoreVector& s, const Activation& act, const TreeShape& shape);
// Nonzero only at the H ancestors of leaf k.
Eigen::VectorXd catnat_grad_log_prob(const ScoreVector& s, const Activation& act,
                                     const TreeShape& shape, std::size_t k);

enum class ParamKind { Softmax, Catnat };

// A concrete score-to-simplex map. Softmax ignores `act`.
struct Parameterization {
  ParamKind kind = ParamKind::Softmax;
  Activation act = Activation::sigmoid();

  static Parameterization softmax() { return {ParamKind::Softmax, Activation::sigmoid()}; }
  static Parameterization catnat(Activation act) { return {ParamKind::Catnat, act}; }
  // Accepts "softmax", "catnat-sigmoid" or "catnat-natural".
  static Parameterization parse(std::string_view name);

  [[nodiscard]] std::string name() const;
  // Category count implied by a score vector length; throws ShapeMismatch.
  [[nodiscard]] std::size_t categories(std::size_t score_count) const;
  [[nodiscard]] std::size_t score_count(std::size_t categories) const;

  [[nodiscard]] ProbabilityVector probs(const ScoreVector& s) const;
  // Catnat entries use the clamped node probabilities.
  [[nodiscard]] Eigen::VectorXd log_probs(const ScoreVector& s) const;
  [[nodiscard]] double log_prob(const ScoreVector& s, std::size_t k) const;
  [[nodiscard]] Eigen::VectorXd grad_log_prob(const ScoreVector& s, std::size_t k) const;
};

// Inverse-CDF draw from an explicit probability vector.
std::size_t sample_inverse_cdf(const ProbabilityVector& p, RandomSource& rng);
// Catnat draw by H sequential Bernoulli decisions from the root.
std::size_t sample_catnat_descent(const ScoreVector& s, const Activation& act,
                                  const TreeShape& shape, RandomSource& rng);
// Descent for catnat, inverse CDF for softmax.
std::size_t sample(const ScoreVector& s, const Parameterization& param, RandomSource& rng);

}  // namespace catnat
