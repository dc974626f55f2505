#pragma once

// Desk-scale graph structure learning: a latent graph with independent
// Bernoulli edges on a community structure feeds a linear graph filter
// y = A x W. Edge parameters are learned with the score-function estimator
// (leave-one-out baseline) and W with the exact pathwise gradient, both under
// the energy-score loss.

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "catnat/activation.hpp"
#include "catnat/random.hpp"

namespace catnat::gsl {

struct GslConfig {
  std::size_t n_nodes = 16;
  std::size_t n_communities = 4;
  double theta_star = 0.5;
  std::size_t d_in = 4;
  std::size_t d_out = 4;
  std::size_t n_samples = 2000;
  std::array<double, 3> split{0.8, 0.1, 0.1};  // train, val, test
  std::size_t M = 32;
  std::size_t batch_size = 64;
  std::size_t M_eval = 64;
  double lr_theta = 2.0;
  double lr_w = 0.05;
  std::size_t epochs = 40;
  std::uint64_t seed = 0;
  ActivationKind parameterization = ActivationKind::Natural;

  // One message per invalid field; empty when the config is usable.
  [[nodiscard]] std::vector<std::string> validation_errors() const;
  // Throws InvalidArgument joining every validation error.
  void validate() const;
  [[nodiscard]] Activation activation() const;
};

// Random streams derived from GslConfig::seed.
inline constexpr std::uint64_t kDataStream = 0;
inline constexpr std::uint64_t kTestEvalStream = 999;

using Edge = std::pair<std::size_t, std::size_t>;

// Ordered pairs (i, j), i != j, inside the same community, row-major order.
// Throws BadShape unless n_nodes is divisible by n_communities.
std::vector<Edge> community_edges(std::size_t n_nodes, std::size_t n_communities);

struct Sample {
  Eigen::MatrixXd x;  // n_nodes x d_in
  Eigen::MatrixXd y;  // n_nodes x d_out
};

struct Dataset {
  GslConfig config;
  std::vector<Edge> edges;
  Eigen::VectorXd theta_star;  // one entry per edge
  Eigen::MatrixXd W_star;      // d_in x d_out
  std::vector<Sample> samples;
  std::vector<std::size_t> train, val, test;

  [[nodiscard]] const std::vector<std::size_t>& split(std::string_view name) const;
};

// Edge scores for the masked pairs; every unmasked pair has theta = 0 and
// carries no parameter.
struct BernoulliGraphParams {
  std::size_t n_nodes = 0;
  std::vector<Edge> edges;
  Eigen::VectorXd scores;
  Activation act;

  [[nodiscard]] Eigen::VectorXd theta() const;
  [[nodiscard]] Eigen::MatrixXd sample_adjacency(RandomSource& rng) const;
  // Inverts the activation so that theta() reproduces `theta`.
  static BernoulliGraphParams from_theta(std::size_t n_nodes, std::vector<Edge> edges,
                                         const Eigen::VectorXd& theta, const Activation& act);
};

struct LinearGraphModel {
  Eigen::MatrixXd W;  // d_in x d_out

  [[nodiscard]] Eigen::MatrixXd predict(const Eigen::MatrixXd& A, const Eigen::MatrixXd& x) const {
    return A * x * W;
  }
};

struct GslMetrics {
  double es_loss = 0.0;
  double pp_mae = 0.0;
  double pp_mse = 0.0;
  double mae_theta = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;
  GslMetrics metrics;
};

Dataset generate_dataset(const GslConfig& cfg, RandomSource& rng);

// Binary entropy in shannons, with 0 log 0 = 0.
double entropy_per_edge(double theta);

// (1/M) sum_m ||yhat_m - y|| - 1/(2M(M-1)) sum_{m != n} ||yhat_m - yhat_n||.
// Throws DegenerateConfig for M < 2.
double energy_score(std::span<const Eigen::VectorXd> samples, const Eigen::VectorXd& y);

double mae_theta(const BernoulliGraphParams& params, const Eigen::VectorXd& theta_star);

GslMetrics evaluate(const BernoulliGraphParams& params, const LinearGraphModel& model, const Dataset& data,
                    std::span<const std::size_t> indices, std::size_t M_eval, RandomSource& rng);

// Presence (1) or absence (0) of each candidate edge in one sampled graph.
using EdgeMask = std::vector<std::uint8_t>;

std::vector<EdgeMask> sample_edge_masks(const BernoulliGraphParams& params, std::size_t M, RandomSource& rng);

struct EsGradients {
  Eigen::MatrixXd W;       // exact gradient of the batch-mean energy score
  Eigen::VectorXd scores;  // score-function estimate, leave-one-out baseline
  double es_loss = 0.0;    // batch-mean energy score of the given graphs
};

// Gradients of the mini-batch energy score for M graphs shared by every
// sample in the batch. The score estimator uses the per-graph signal
//   l_m = ||yhat_m - y|| - 1/(M-1) sum_{n != m} ||yhat_m - yhat_n||
// with b_m the mean of the same signal over the other graphs rebuilt without
// graph m, which keeps it unbiased. Throws DegenerateConfig for M < 2.
EsGradients es_gradients(const BernoulliGraphParams& params, const LinearGraphModel& model, const Dataset& data,
                         std::span<const std::size_t> batch, std::span<const EdgeMask> graphs,
                         bool need_scores = true);

struct TrainOptions {
  // Keep the edge parameters at their initial value and fit only W.
  bool freeze_theta = false;
  // Overrides the Uniform(0, 0.1) initialisation of theta.
  std::optional<Eigen::VectorXd> initial_theta;
};

struct TrainResult {
  BernoulliGraphParams params;  // snapshot at the best validation epoch
  LinearGraphModel model;
  std::vector<EpochRecord> history;  // validation rows, then one test row
  std::size_t best_epoch = 0;
  GslMetrics test;
};

TrainResult train(const GslConfig& cfg, const Dataset& data, const TrainOptions& options = {});

}  // namespace catnat::gsl
