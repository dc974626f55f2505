#include "catnat/fisher.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "catnat/error.hpp"

namespace catnat {

double FisherMatrix::max_abs_off_diagonal() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
      if (i != j) worst = std::max(worst, std::abs(entries(i, j)));
    }
  }
  return worst;
}

double FisherMatrix::min_eigenvalue() const {
  const Eigen::MatrixXd sym = 0.5 * (entries + entries.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

FisherMatrix fim_oracle(const ScoreVector& s, const Parameterization& param) {
  const std::size_t K = param.categories(static_cast<std::size_t>(s.size()));
  if (K > kOracleMaxCategories) {
    throw Error(ErrorKind::TooLarge, "enumeration oracle is limited to K <= 65536");
  }
  const ProbabilityVector p = param.probs(s);
  FisherMatrix G{Eigen::MatrixXd::Zero(s.size(), s.size()), Provenance::Oracle};
  for (std::size_t k = 0; k < K; ++k) {
    const double pk = p[static_cast<Eigen::Index>(k)];
    if (pk == 0.0) continue;
    const Eigen::VectorXd g = param.grad_log_prob(s, k);
    G.entries.noalias() += pk * g * g.transpose();
  }
  return G;
}

FisherMatrix fim_softmax_analytic(const ScoreVector& s) {
  const ProbabilityVector p = softmax_probs(s);
  Eigen::MatrixXd G = -p * p.transpose();
  G.diagonal() += p;
  return {std::move(G), Provenance::Analytic};
}

FisherMatrix fim_catnat_analytic(const ScoreVector& s, const Activation& act, const TreeShape& shape) {
  const NodeActivations nodes = catnat_nodes(s, act, shape);
  const Eigen::Index n = s.size();
  Eigen::VectorXd diag(n);
  const double natural_scale = std::pow(std::numbers::pi / act.width, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (act.kind == ActivationKind::Natural) {
      // Constant in the band (boundary included by continuity), zero outside.
      diag[i] = act.in_band(s[i]) ? nodes.path_prob[i] * natural_scale : 0.0;
    } else {
      const double a = std::clamp(nodes.a[i], kProbClamp, 1.0 - kProbClamp);
      const double b = std::clamp(act.complement(s[i]), kProbClamp, 1.0 - kProbClamp);
      const double da = act.grad(s[i]);
      diag[i] = nodes.path_prob[i] * da * da / (a * b);
    }
  }
  return {diag.asDiagonal(), Provenance::Analytic};
}

FisherMatrix fim_analytic(const ScoreVector& s, const Parameterization& param) {
  if (param.kind == ParamKind::Softmax) return fim_softmax_analytic(s);
  return fim_catnat_analytic(s, param.act, TreeShape(param.categories(static_cast<std::size_t>(s.size()))));
}

NaturalGradient natural_gradient(const Eigen::VectorXd& grad, const FisherMatrix& G, double damping) {
  if (G.entries.rows() != G.entries.cols() || grad.size() != G.entries.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "gradient length does not match the Fisher matrix");
  }
  if (!(damping >= 0.0)) throw Error(ErrorKind::InvalidArgument, "damping must be >= 0");

  const Eigen::Index n = grad.size();
  const bool diagonal = G.max_abs_off_diagonal() == 0.0;
  Eigen::VectorXd eig;
  if (diagonal) {
    eig = G.entries.diagonal().array() + damping;
  } else {
    const Eigen::MatrixXd sym = 0.5 * (G.entries + G.entries.transpose());
    eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().array() +
          damping;
  }
  const double lo = eig.minCoeff();
  const double hi = eig.maxCoeff();
  const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition <= kMaxCondition)) {
    throw Error(ErrorKind::Singular, "damped Fisher matrix has condition estimate " + std::to_string(condition));
  }

  NaturalGradient out{Eigen::VectorXd(n), condition};
  if (diagonal) {
    out.direction = grad.array() / eig.array();
  } else {
    Eigen::MatrixXd damped = G.entries;
    damped.diagonal().array() += damping;
    out.direction = damped.ldlt().solve(grad);
  }
  return out;
}

KlCheck kl_quadratic_check(const ScoreVector& s, const ScoreVector& ds, const Parameterization& param) {
  if (ds.size() != s.size()) throw Error(ErrorKind::ShapeMismatch, "ds must match s in length");
  const ProbabilityVector p = param.probs(s);
  if ((p.array() == 0.0).any()) {
    throw Error(ErrorKind::ZeroSupport, "p(s) has a zero entry; KL is undefined");
  }
  const Eigen::VectorXd lp = param.log_probs(s);
  const Eigen::VectorXd lq = param.log_probs(s + ds);
  KlCheck out;
  out.kl_exact = (p.array() * (lp - lq).array()).sum();
  out.kl_quad = 0.5 * ds.dot(fim_analytic(s, param).entries * ds);
  return out;
}

}  // namespace catnat
