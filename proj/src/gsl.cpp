#include "catnat/gsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "catnat/error.hpp"
#include "catnat/param.hpp"

namespace catnat::gsl {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kInitThetaMax = 0.1;

// Stream ids derived from the experiment seed.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamShuffle = 2;
constexpr std::uint64_t kStreamGraphs = 3;
constexpr std::uint64_t kStreamEpochEval = 1000;

// Flattens an n x d matrix column by column into row `m` of `out`.
void flatten_into(const Eigen::Ref<const Eigen::MatrixXd>& mat, RowMatrix& out, Eigen::Index m) {
  const Eigen::Index rows = mat.rows();
  for (Eigen::Index c = 0; c < mat.cols(); ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) out(m, c * rows + r) = mat(r, c);
  }
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& mat) {
  return Eigen::Map<const Eigen::VectorXd>(mat.data(), mat.size());
}

}  // namespace

std::vector<std::string> GslConfig::validation_errors() const {
  std::vector<std::string> errors;
  auto add = [&](const std::string& field, const std::string& why) { errors.push_back(field + ": " + why); };
  if (n_nodes < 2) add("n_nodes", "must be >= 2");
  if (n_communities < 1) {
    add("n_communities", "must be >= 1");
  } else if (n_nodes % n_communities != 0) {
    add("n_communities", "must divide n_nodes");
  } else if (n_nodes / n_communities < 2) {
    add("n_communities", "communities need at least two nodes to hold an edge");
  }
  if (!(theta_star >= 0.0 && theta_star <= 1.0)) add("theta_star", "must lie in [0, 1]");
  if (d_in < 1) add("d_in", "must be >= 1");
  if (d_out < 1) add("d_out", "must be >= 1");
  bool fractions_ok = true;
  for (double f : split) {
    if (!(f >= 0.0 && f <= 1.0)) fractions_ok = false;
  }
  if (!fractions_ok) {
    add("split", "fractions must lie in [0, 1]");
  } else if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) {
    add("split", "fractions must sum to 1");
  }
  if (n_samples < 3) add("n_samples", "must be >= 3");
  if (M < 2) add("M", "must be >= 2");
  if (batch_size < 1) add("batch_size", "must be >= 1");
  if (M_eval < 2) add("M_eval", "must be >= 2");
  if (!(lr_theta >= 0.0) || !std::isfinite(lr_theta)) add("lr_theta", "must be finite and >= 0");
  if (!(lr_w >= 0.0) || !std::isfinite(lr_w)) add("lr_w", "must be finite and >= 0");
  if (epochs < 1) add("epochs", "must be >= 1");
  return errors;
}

void GslConfig::validate() const {
  const auto errors = validation_errors();
  if (errors.empty()) return;
  std::ostringstream msg;
  for (std::size_t i = 0; i < errors.size(); ++i) msg << (i ? "; " : "") << errors[i];
  throw Error(ErrorKind::InvalidArgument, msg.str());
}

Activation GslConfig::activation() const {
  return parameterization == ActivationKind::Natural ? Activation::natural() : Activation::sigmoid();
}

std::vector<Edge> community_edges(std::size_t n_nodes, std::size_t n_communities) {
  if (n_communities == 0 || n_nodes % n_communities != 0) {
    throw Error(ErrorKind::BadShape, "n_nodes = " + std::to_string(n_nodes) +
                                         " is not divisible by n_communities = " + std::to_string(n_communities));
  }
  const std::size_t size = n_nodes / n_communities;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    for (std::size_t j = 0; j < n_nodes; ++j) {
      if (i != j && i / size == j / size) edges.emplace_back(i, j);
    }
  }
  return edges;
}

const std::vector<std::size_t>& Dataset::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw Error(ErrorKind::InvalidArgument, "unknown split '" + std::string(name) + "'");
}

Eigen::VectorXd BernoulliGraphParams::theta() const {
  return scores.unaryExpr([this](double s) { return act.eval(s); });
}

Eigen::MatrixXd BernoulliGraphParams::sample_adjacency(RandomSource& rng) const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_nodes), static_cast<Eigen::Index>(n_nodes));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (rng.bernoulli(act.eval(scores[static_cast<Eigen::Index>(e)]))) {
      A(static_cast<Eigen::Index>(edges[e].first), static_cast<Eigen::Index>(edges[e].second)) = 1.0;
    }
  }
  return A;
}

BernoulliGraphParams BernoulliGraphParams::from_theta(std::size_t n_nodes, std::vector<Edge> edges,
                                                      const Eigen::VectorXd& theta, const Activation& act) {
  if (static_cast<std::size_t>(theta.size()) != edges.size()) {
    throw Error(ErrorKind::ShapeMismatch, "theta needs one entry per edge");
  }
  BernoulliGraphParams params{n_nodes, std::move(edges), theta.unaryExpr([&](double t) { return act.inverse(t); }),
                              act};
  return params;
}

Dataset generate_dataset(const GslConfig& cfg, RandomSource& rng) {
  Dataset data;
  data.edges = community_edges(cfg.n_nodes, cfg.n_communities);
  cfg.validate();
  data.config = cfg;
  data.theta_star = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(data.edges.size()), cfg.theta_star);

  const auto n = static_cast<Eigen::Index>(cfg.n_nodes);
  const auto d_in = static_cast<Eigen::Index>(cfg.d_in);
  const auto d_out = static_cast<Eigen::Index>(cfg.d_out);
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_in));
  data.W_star.resize(d_in, d_out);
  for (Eigen::Index i = 0; i < d_in; ++i) {
    for (Eigen::Index j = 0; j < d_out; ++j) data.W_star(i, j) = w_scale * rng.normal();
  }

  const LinearGraphModel generator{data.W_star};
  data.samples.reserve(cfg.n_samples);
  for (std::size_t t = 0; t < cfg.n_samples; ++t) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : data.edges) {
      if (rng.bernoulli(cfg.theta_star)) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    }
    Eigen::MatrixXd x(n, d_in);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d_in; ++j) x(i, j) = rng.normal();
    }
    Eigen::MatrixXd y = generator.predict(A, x);
    data.samples.push_back({std::move(x), std::move(y)});
  }

  const auto total = static_cast<double>(cfg.n_samples);
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.split[0] * total));
  const auto n_val = std::min(cfg.n_samples - n_train, static_cast<std::size_t>(std::llround(cfg.split[1] * total)));
  for (std::size_t t = 0; t < cfg.n_samples; ++t) {
    (t < n_train ? data.train : t < n_train + n_val ? data.val : data.test).push_back(t);
  }
  return data;
}

double entropy_per_edge(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "theta must lie in [0, 1]");
  }
  auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
  return term(theta) + term(1.0 - theta);
}

double energy_score(std::span<const Eigen::VectorXd> samples, const Eigen::VectorXd& y) {
  const std::size_t M = samples.size();
  if (M < 2) throw Error(ErrorKind::DegenerateConfig, "energy score needs at least two samples");
  double fit = 0.0;
  double spread = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    fit += (samples[m] - y).norm();
    for (std::size_t k = m + 1; k < M; ++k) spread += (samples[m] - samples[k]).norm();
  }
  const auto Md = static_cast<double>(M);
  // Unordered pairs count once, hence 1/(M(M-1)) instead of 1/(2M(M-1)).
  return fit / Md - spread / (Md * (Md - 1.0));
}

double mae_theta(const BernoulliGraphParams& params, const Eigen::VectorXd& theta_star) {
  if (theta_star.size() != params.scores.size()) {
    throw Error(ErrorKind::ShapeMismatch, "theta_star needs one entry per edge");
  }
  if (theta_star.size() == 0) return 0.0;
  return (params.theta() - theta_star).cwiseAbs().mean();
}

GslMetrics evaluate(const BernoulliGraphParams& params, const LinearGraphModel& model, const Dataset& data,
                    std::span<const std::size_t> indices, std::size_t M_eval, RandomSource& rng) {
  if (M_eval < 2) throw Error(ErrorKind::DegenerateConfig, "evaluation needs M_eval >= 2");
  GslMetrics out;
  out.mae_theta = mae_theta(params, data.theta_star);
  if (indices.empty()) return out;

  std::vector<Eigen::VectorXd> preds(M_eval);
  double abs_err = 0.0;
  double sq_err = 0.0;
  double entries = 0.0;
  for (std::size_t idx : indices) {
    const Sample& sample = data.samples.at(idx);
    const Eigen::VectorXd y = flatten(sample.y);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(y.size());
    for (auto& p : preds) {
      p = flatten(model.predict(params.sample_adjacency(rng), sample.x));
      mean += p;
    }
    mean /= static_cast<double>(M_eval);
    out.es_loss += energy_score(preds, y);
    abs_err += (mean - y).cwiseAbs().sum();
    sq_err += (mean - y).squaredNorm();
    entries += static_cast<double>(y.size());
  }
  out.es_loss /= static_cast<double>(indices.size());
  out.pp_mae = abs_err / entries;
  out.pp_mse = sq_err / entries;
  return out;
}

namespace {

// Score gradient of log P(A_e = present / absent) for one edge, i.e. the
// K = 2 catnat gradient for categories 1 and 0.
struct EdgeScoreGrads {
  Eigen::VectorXd present;
  Eigen::VectorXd absent;
};

EdgeScoreGrads edge_score_grads(const BernoulliGraphParams& params) {
  const TreeShape single(2);
  const auto E = params.scores.size();
  EdgeScoreGrads g{Eigen::VectorXd(E), Eigen::VectorXd(E)};
  Eigen::VectorXd s(1);
  for (Eigen::Index e = 0; e < E; ++e) {
    s[0] = params.scores[e];
    g.present[e] = catnat_grad_log_prob(s, params.act, single, 1)[0];
    g.absent[e] = catnat_grad_log_prob(s, params.act, single, 0)[0];
  }
  return g;
}

}  // namespace

std::vector<EdgeMask> sample_edge_masks(const BernoulliGraphParams& params, std::size_t M, RandomSource& rng) {
  std::vector<EdgeMask> masks(M, EdgeMask(params.edges.size()));
  for (auto& mask : masks) {
    for (std::size_t e = 0; e < mask.size(); ++e) {
      mask[e] = rng.bernoulli(params.act.eval(params.scores[static_cast<Eigen::Index>(e)])) ? 1 : 0;
    }
  }
  return masks;
}

EsGradients es_gradients(const BernoulliGraphParams& params, const LinearGraphModel& model, const Dataset& data,
                         std::span<const std::size_t> batch, std::span<const EdgeMask> present, bool need_scores) {
  const std::size_t M = present.size();
  if (M < 2) throw Error(ErrorKind::DegenerateConfig, "energy-score gradients need at least two graphs");
  if (batch.empty()) throw Error(ErrorKind::EmptyInput, "empty batch");
  const auto n = static_cast<Eigen::Index>(params.n_nodes);
  const auto Mi = static_cast<Eigen::Index>(M);
  const auto Md = static_cast<double>(M);
  const auto E = static_cast<Eigen::Index>(params.edges.size());

  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(Mi * n, n);
  for (Eigen::Index m = 0; m < Mi; ++m) {
    const EdgeMask& mask = present[static_cast<std::size_t>(m)];
    if (mask.size() != params.edges.size()) throw Error(ErrorKind::ShapeMismatch, "edge mask length differs from edge count");
    for (Eigen::Index e = 0; e < E; ++e) {
      if (mask[static_cast<std::size_t>(e)]) {
        const auto& [i, j] = params.edges[static_cast<std::size_t>(e)];
        stacked(m * n + static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
      }
    }
  }

  const Eigen::Index d_out = model.W.cols();
  const Eigen::Index flat = n * d_out;
  EsGradients out{Eigen::MatrixXd::Zero(model.W.rows(), d_out), Eigen::VectorXd::Zero(E), 0.0};
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(Mi);
  Eigen::VectorXd baseline = Eigen::VectorXd::Zero(Mi);

  RowMatrix preds(Mi, flat);
  RowMatrix grad_preds(Mi, flat);
  Eigen::MatrixXd dist(Mi, Mi);
  Eigen::VectorXd fit(Mi);
  for (std::size_t idx : batch) {
    const Sample& sample = data.samples.at(idx);
    const Eigen::MatrixXd z = stacked * sample.x;  // (M n) x d_in
    const Eigen::MatrixXd yhat = z * model.W;     // (M n) x d_out
    for (Eigen::Index m = 0; m < Mi; ++m) flatten_into(yhat.middleRows(m * n, n), preds, m);
    const Eigen::RowVectorXd y = flatten(sample.y).transpose();

    for (Eigen::Index m = 0; m < Mi; ++m) fit[m] = (preds.row(m) - y).norm();
    dist.setZero();
    for (Eigen::Index m = 0; m < Mi; ++m) {
      for (Eigen::Index k = m + 1; k < Mi; ++k) dist(m, k) = dist(k, m) = (preds.row(m) - preds.row(k)).norm();
    }
    const Eigen::VectorXd repel = dist.rowwise().sum();
    out.es_loss += fit.sum() / Md - repel.sum() / (2.0 * Md * (Md - 1.0));

    // Gradient of the sample's energy score with respect to each prediction.
    for (Eigen::Index m = 0; m < Mi; ++m) {
      Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(flat);
      if (fit[m] > 0.0) g += (preds.row(m) - y) / (Md * fit[m]);
      for (Eigen::Index k = 0; k < Mi; ++k) {
        if (k != m && dist(m, k) > 0.0) {
          g -= (preds.row(m) - preds.row(k)) / (Md * (Md - 1.0) * dist(m, k));
        }
      }
      grad_preds.row(m) = g;
    }
    for (Eigen::Index m = 0; m < Mi; ++m) {
      const Eigen::Map<const Eigen::MatrixXd> g(grad_preds.row(m).data(), n, d_out);
      out.W.noalias() += z.middleRows(m * n, n).transpose() * g;
    }

    if (need_scores) {
      const double fit_total = fit.sum();
      const double repel_total = repel.sum();
      for (Eigen::Index m = 0; m < Mi; ++m) {
        signal[m] += fit[m] - repel[m] / (Md - 1.0);
        double b = (fit_total - fit[m]) / (Md - 1.0);
        if (M > 2) b -= (repel_total - 2.0 * repel[m]) / ((Md - 1.0) * (Md - 2.0));
        baseline[m] += b;
      }
    }
  }

  const auto B = static_cast<double>(batch.size());
  out.W /= B;
  out.es_loss /= B;
  if (need_scores) {
    const EdgeScoreGrads eg = edge_score_grads(params);
    for (Eigen::Index m = 0; m < Mi; ++m) {
      const double advantage = (signal[m] - baseline[m]) / B;
      if (advantage == 0.0) continue;
      const auto& on = present[static_cast<std::size_t>(m)];
      for (Eigen::Index e = 0; e < E; ++e) {
        out.scores[e] += advantage * (on[static_cast<std::size_t>(e)] ? eg.present[e] : eg.absent[e]);
      }
    }
    out.scores /= Md;
  }
  return out;
}

TrainResult train(const GslConfig& cfg, const Dataset& data, const TrainOptions& options) {
  cfg.validate();
  if (data.samples.empty() || data.train.empty()) {
    throw Error(ErrorKind::InvalidArgument, "dataset has no training samples");
  }
  const Activation act = cfg.activation();
  RandomSource init_rng(cfg.seed, kStreamInit);
  RandomSource shuffle_rng(cfg.seed, kStreamShuffle);
  RandomSource graph_rng(cfg.seed, kStreamGraphs);

  Eigen::VectorXd theta0(static_cast<Eigen::Index>(data.edges.size()));
  if (options.initial_theta) {
    theta0 = *options.initial_theta;
  } else {
    for (Eigen::Index e = 0; e < theta0.size(); ++e) theta0[e] = kInitThetaMax * init_rng.uniform_open();
  }
  BernoulliGraphParams params = BernoulliGraphParams::from_theta(cfg.n_nodes, data.edges, theta0, act);

  const double w_scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_in));
  LinearGraphModel model{Eigen::MatrixXd(static_cast<Eigen::Index>(cfg.d_in), static_cast<Eigen::Index>(cfg.d_out))};
  for (Eigen::Index i = 0; i < model.W.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.W.cols(); ++j) model.W(i, j) = w_scale * init_rng.normal();
  }

  TrainResult result{params, model, {}, 0, {}};
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order = data.train;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates with the portable generator.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const auto masks = sample_edge_masks(params, cfg.M, graph_rng);
      const EsGradients g = es_gradients(params, model, data, batch, masks, !options.freeze_theta);
      model.W -= cfg.lr_w * g.W;
      if (!options.freeze_theta) params.scores -= cfg.lr_theta * g.scores;
    }

    RandomSource eval_rng(cfg.seed, kStreamEpochEval + epoch);
    const GslMetrics val = evaluate(params, model, data, data.val, cfg.M_eval, eval_rng);
    result.history.push_back({epoch, "val", val});
    if (val.es_loss < best_val) {
      best_val = val.es_loss;
      result.best_epoch = epoch;
      result.params = params;
      result.model = model;
    }
  }

  RandomSource test_rng(cfg.seed, kTestEvalStream);
  result.test = evaluate(result.params, result.model, data, data.test, cfg.M_eval, test_rng);
  result.history.push_back({result.best_epoch, "test", result.test});
  return result;
}

}  // namespace catnat::gsl
