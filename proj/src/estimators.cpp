#include "catnat/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "catnat/error.hpp"

namespace catnat {

std::vector<double> leave_one_out_baselines(std::span<const double> losses) {
  const std::size_t M = losses.size();
  if (M < 2) {
    throw Error(ErrorKind::DegenerateConfig, "leave-one-out baseline needs at least two samples");
  }
  double total = 0.0;
  for (double l : losses) total += l;
  std::vector<double> baselines(M);
  for (std::size_t m = 0; m < M; ++m) {
    baselines[m] = (total - losses[m]) / static_cast<double>(M - 1);
  }
  return baselines;
}

Eigen::VectorXd sfge_from_draws(const ScoreVector& s, const Parameterization& param,
                                const CategoryLoss& loss, std::span<const std::size_t> draws,
                                Baseline baseline) {
  const std::size_t M = draws.size();
  if (M == 0 || (baseline == Baseline::LeaveOneOut && M < 2)) {
    throw Error(ErrorKind::DegenerateConfig, "score-function estimator needs M >= 1 (M >= 2 with leave-one-out)");
  }
  std::vector<double> losses(M);
  std::transform(draws.begin(), draws.end(), losses.begin(), [&](std::size_t k) { return loss(k); });
  std::vector<double> baselines =
      baseline == Baseline::LeaveOneOut ? leave_one_out_baselines(losses) : std::vector<double>(M, 0.0);

  Eigen::VectorXd g = Eigen::VectorXd::Zero(s.size());
  for (std::size_t m = 0; m < M; ++m) {
    const double advantage = losses[m] - baselines[m];
    if (advantage != 0.0) g += advantage * param.grad_log_prob(s, draws[m]);
  }
  return g / static_cast<double>(M);
}

Eigen::VectorXd sfge_grad(const ScoreVector& s, const Parameterization& param, const CategoryLoss& loss,
                          const SfgeConfig& cfg, RandomSource& rng) {
  if (cfg.samples == 0 || (cfg.baseline == Baseline::LeaveOneOut && cfg.samples < 2)) {
    throw Error(ErrorKind::DegenerateConfig, "leave-one-out baseline needs M >= 2");
  }
  std::vector<std::size_t> draws(cfg.samples);
  for (auto& k : draws) k = sample(s, param, rng);
  return sfge_from_draws(s, param, loss, draws, cfg.baseline);
}

GumbelSample gumbel_softmax_sample(const ScoreVector& s, const Parameterization& param,
                                   const GumbelConfig& cfg, RandomSource& rng) {
  if (!(cfg.tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be > 0");
  const Eigen::VectorXd logp = param.log_probs(s).cwiseMax(std::log(kProbClamp));
  const Eigen::Index K = logp.size();
  Eigen::VectorXd logits(K);
  for (Eigen::Index k = 0; k < K; ++k) logits[k] = (logp[k] + rng.gumbel()) / cfg.tau;

  GumbelSample out;
  out.relaxed = softmax_probs(logits);
  Eigen::Index best = 0;
  out.relaxed.maxCoeff(&best);
  out.index = static_cast<std::size_t>(best);
  out.hard = Eigen::VectorXd::Zero(K);
  out.hard[best] = 1.0;
  return out;
}

GumbelConfig anneal(const GumbelConfig& cfg, std::size_t step) {
  GumbelConfig out = cfg;
  out.tau = std::max(cfg.tau_min, cfg.tau0 * std::exp(-cfg.anneal_rate * static_cast<double>(step)));
  return out;
}

}  // namespace catnat
