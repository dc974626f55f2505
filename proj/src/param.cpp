#include "catnat/param.hpp"

#include <algorithm>
#include <cmath>

#include "catnat/error.hpp"

namespace catnat {

namespace {

void require_catnat_shape(const ScoreVector& s, const TreeShape& shape) {
  if (static_cast<std::size_t>(s.size()) != shape.node_count()) {
    throw Error(ErrorKind::ShapeMismatch, "catnat with K = " + std::to_string(shape.categories()) +
                                              " needs " + std::to_string(shape.node_count()) +
                                              " scores, got " + std::to_string(s.size()));
  }
}

double clamp_prob(double a) noexcept { return std::clamp(a, kProbClamp, 1.0 - kProbClamp); }

// Probability of taking `bit` at a node with score x.
double branch_prob(const Activation& act, double x, std::uint8_t bit) noexcept {
  return bit ? act.eval(x) : act.complement(x);
}

}  // namespace

ProbabilityVector softmax_probs(const ScoreVector& s) {
  if (s.size() < 2) {
    throw Error(ErrorKind::EmptyInput, "softmax needs at least two scores");
  }
  const Eigen::VectorXd e = (s.array() - s.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd softmax_log_probs(const ScoreVector& s) {
  if (s.size() < 2) {
    throw Error(ErrorKind::EmptyInput, "softmax needs at least two scores");
  }
  const double m = s.maxCoeff();
  const double lse = m + std::log((s.array() - m).exp().sum());
  return s.array() - lse;
}

Eigen::VectorXd softmax_grad_log_prob(const ScoreVector& s, std::size_t k) {
  Eigen::VectorXd g = -softmax_probs(s);
  if (k >= static_cast<std::size_t>(s.size())) {
    throw Error(ErrorKind::OutOfRange, "category " + std::to_string(k) + " >= K");
  }
  g[static_cast<Eigen::Index>(k)] += 1.0;
  return g;
}

NodeActivations catnat_nodes(const ScoreVector& s, const Activation& act, const TreeShape& shape) {
  require_catnat_shape(s, shape);
  const auto n = static_cast<Eigen::Index>(shape.node_count());
  NodeActivations nodes{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) nodes.a[i] = act.eval(s[i]);
  nodes.path_prob[0] = 1.0;
  for (Eigen::Index node = 2; node <= n; ++node) {
    const Eigen::Index parent = node / 2;
    // Even children are reached with b = 1 and carry a.
    nodes.path_prob[node - 1] =
        nodes.path_prob[parent - 1] * branch_prob(act, s[parent - 1], node % 2 == 0 ? 1 : 0);
  }
  return nodes;
}

CatnatOutput catnat_probs(const ScoreVector& s, const Activation& act, const TreeShape& shape) {
  CatnatOutput out{ProbabilityVector(static_cast<Eigen::Index>(shape.categories())),
                   catnat_nodes(s, act, shape)};
  const std::size_t K = shape.categories();
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t leaf = 2 * K - 1 - k;
    const auto parent = static_cast<Eigen::Index>(leaf / 2);
    out.probs[static_cast<Eigen::Index>(k)] =
        out.nodes.path_prob[parent - 1] * branch_prob(act, s[parent - 1], leaf % 2 == 0 ? 1 : 0);
  }
  return out;
}

double catnat_log_prob(const ScoreVector& s, const Activation& act, const TreeShape& shape,
                       std::size_t k) {
  require_catnat_shape(s, shape);
  double lp = 0.0;
  for (const auto& step : ancestors_of_category(k, shape)) {
    lp += std::log(clamp_prob(branch_prob(act, s[static_cast<Eigen::Index>(step.node - 1)], step.bit)));
  }
  return lp;
}

Eigen::VectorXd catnat_log_probs(const ScoreVector& s, const Activation& act, const TreeShape& shape) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(shape.categories()));
  for (std::size_t k = 0; k < shape.categories(); ++k) {
    out[static_cast<Eigen::Index>(k)] = catnat_log_prob(s, act, shape, k);
  }
  return out;
}

Eigen::VectorXd catnat_grad_log_prob(const ScoreVector& s, const Activation& act,
                                     const TreeShape& shape, std::size_t k) {
  require_catnat_shape(s, shape);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(s.size());
  for (const auto& step : ancestors_of_category(k, shape)) {
    const auto i = static_cast<Eigen::Index>(step.node - 1);
    const double denom = clamp_prob(branch_prob(act, s[i], step.bit));
    g[i] = act.grad(s[i]) * (step.bit ? 1.0 : -1.0) / denom;
  }
  return g;
}

Parameterization Parameterization::parse(std::string_view name) {
  if (name == "softmax") return softmax();
  if (name == "catnat-sigmoid") return catnat(Activation::sigmoid());
  if (name == "catnat-natural") return catnat(Activation::natural());
  throw Error(ErrorKind::InvalidArgument, "unknown parameterization '" + std::string(name) + "'");
}

std::string Parameterization::name() const {
  if (kind == ParamKind::Softmax) return "softmax";
  return act.kind == ActivationKind::Sigmoid ? "catnat-sigmoid" : "catnat-natural";
}

std::size_t Parameterization::categories(std::size_t score_count) const {
  if (kind == ParamKind::Softmax) {
    if (score_count < 2) throw Error(ErrorKind::EmptyInput, "softmax needs at least two scores");
    return score_count;
  }
  const std::size_t K = score_count + 1;
  if (K < 2 || (K & (K - 1)) != 0) {
    throw Error(ErrorKind::ShapeMismatch, "catnat needs K - 1 scores with K a power of two, got " +
                                              std::to_string(score_count) + " scores");
  }
  return K;
}

std::size_t Parameterization::score_count(std::size_t categories) const {
  return kind == ParamKind::Softmax ? categories : TreeShape(categories).node_count();
}

ProbabilityVector Parameterization::probs(const ScoreVector& s) const {
  if (kind == ParamKind::Softmax) return softmax_probs(s);
  return catnat_probs(s, act, TreeShape(categories(static_cast<std::size_t>(s.size())))).probs;
}

Eigen::VectorXd Parameterization::log_probs(const ScoreVector& s) const {
  if (kind == ParamKind::Softmax) return softmax_log_probs(s);
  return catnat_log_probs(s, act, TreeShape(categories(static_cast<std::size_t>(s.size()))));
}

double Parameterization::log_prob(const ScoreVector& s, std::size_t k) const {
  if (kind == ParamKind::Softmax) {
    if (k >= static_cast<std::size_t>(s.size())) throw Error(ErrorKind::OutOfRange, "category out of range");
    return softmax_log_probs(s)[static_cast<Eigen::Index>(k)];
  }
  return catnat_log_prob(s, act, TreeShape(categories(static_cast<std::size_t>(s.size()))), k);
}

Eigen::VectorXd Parameterization::grad_log_prob(const ScoreVector& s, std::size_t k) const {
  if (kind == ParamKind::Softmax) return softmax_grad_log_prob(s, k);
  return catnat_grad_log_prob(s, act, TreeShape(categories(static_cast<std::size_t>(s.size()))), k);
}

std::size_t sample_inverse_cdf(const ProbabilityVector& p, RandomSource& rng) {
  const double u = rng.uniform() * p.sum();
  double cdf = 0.0;
  const auto K = static_cast<std::size_t>(p.size());
  for (std::size_t k = 0; k < K; ++k) {
    cdf += p[static_cast<Eigen::Index>(k)];
    if (u < cdf) return k;
  }
  // Rounding can leave u just above the last partial sum.
  for (std::size_t k = K; k-- > 0;) {
    if (p[static_cast<Eigen::Index>(k)] > 0.0) return k;
  }
  return K - 1;
}

std::size_t sample_catnat_descent(const ScoreVector& s, const Activation& act,
                                  const TreeShape& shape, RandomSource& rng) {
  require_catnat_shape(s, shape);
  std::size_t node = 1;
  std::size_t k = 0;
  for (int h = 0; h < shape.depth(); ++h) {
    const double a = act.eval(s[static_cast<Eigen::Index>(node - 1)]);
    const std::uint8_t bit = rng.uniform() < a ? 1 : 0;
    k = (k << 1) | bit;
    node = child_for_bit(node, bit);
  }
  return k;
}

std::size_t sample(const ScoreVector& s, const Parameterization& param, RandomSource& rng) {
  if (param.kind == ParamKind::Softmax) return sample_inverse_cdf(softmax_probs(s), rng);
  return sample_catnat_descent(s, param.act,
                               TreeShape(param.categories(static_cast<std::size_t>(s.size()))), rng);
}

}  // namespace catnat
