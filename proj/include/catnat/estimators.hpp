#pragma once

// Gradient estimators for a latent categorical variable: the score-function
// (REINFORCE) estimator with an optional leave-one-out baseline, and the
// Gumbel-softmax relaxation with straight-through hardening.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "catnat/param.hpp"
#include "catnat/random.hpp"

namespace catnat {

enum class Baseline { None, LeaveOneOut };

struct SfgeConfig {
  std::size_t samples = 4;  // M
  Baseline baseline = Baseline::LeaveOneOut;
};

using CategoryLoss = std::function<double(std::size_t)>;

// Per-sample baselines: mean of the other M - 1 losses, or zeros.
// Throws DegenerateConfig for leave-one-out with fewer than two losses.
std::vector<double> leave_one_out_baselines(std::span<const double> losses);

// The estimator evaluated on a fixed set of draws:
//   (1/M) sum_m (loss(k_m) - b_m) grad log p(k_m).
Eigen::VectorXd sfge_from_draws(const ScoreVector& s, const Parameterization& param,
                                const CategoryLoss& loss, std::span<const std::size_t> draws,
                                Baseline baseline);

// Draws M categories from p(s) and evaluates sfge_from_draws.
Eigen::VectorXd sfge_grad(const ScoreVector& s, const Parameterization& param, const CategoryLoss& loss,
                          const SfgeConfig& cfg, RandomSource& rng);

struct GumbelConfig {
  double tau0 = 1.0;      // initial temperature
  double tau = 1.0;       // current temperature
  double tau_min = 0.5;
  double anneal_rate = 3e-5;
  bool straight_through = true;
};

struct GumbelSample {
  Eigen::VectorXd relaxed;  // softmax((log p + g) / tau)
  Eigen::VectorXd hard;     // one_hot(argmax relaxed)
  std::size_t index = 0;    // argmax
  // Value fed forward: `hard` with straight-through, otherwise `relaxed`.
  [[nodiscard]] const Eigen::VectorXd& forward(bool straight_through) const {
    return straight_through ? hard : relaxed;
  }
};

// Noise is added to the clamped log-probabilities of whichever
// parameterization produced p.
GumbelSample gumbel_softmax_sample(const ScoreVector& s, const Parameterization& param,
                                   const GumbelConfig& cfg, RandomSource& rng);

// tau = max(tau_min, tau0 * exp(-anneal_rate * step)).
GumbelConfig anneal(const GumbelConfig& cfg, std::size_t step);

}  // namespace catnat
