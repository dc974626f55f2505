#include "catnat/verify.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "catnat/error.hpp"
#include "catnat/fisher.hpp"
#include "catnat/tree.hpp"

namespace catnat::verify {

namespace {

const std::vector<Parameterization>& all_parameterizations() {
  static const std::vector<Parameterization> params{
      Parameterization::softmax(),
      Parameterization::catnat(Activation::sigmoid()),
      Parameterization::catnat(Activation::natural()),
  };
  return params;
}

const std::vector<Activation>& catnat_activations() {
  static const std::vector<Activation> acts{Activation::sigmoid(), Activation::natural()};
  return acts;
}

const char* act_name(const Activation& act) {
  return act.kind == ActivationKind::Sigmoid ? "sigmoid" : "natural";
}

// Tracks the worst deviation of one property over many trials.
class Property {
 public:
  Property(std::string name, double tolerance, bool strict = false)
      : result_{std::move(name), 0.0, tolerance, true, {}}, strict_(strict) {}

  void observe(double deviation, const std::string& where = {}) {
    if (std::isnan(deviation)) deviation = std::numeric_limits<double>::infinity();
    if (deviation > result_.max_deviation || (result_.detail.empty() && !where.empty() && deviation == 0.0 &&
                                              result_.max_deviation == 0.0)) {
      if (deviation > result_.max_deviation) result_.detail = where;
      result_.max_deviation = deviation;
    }
  }

  PropertyResult finish() {
    result_.passed = strict_ ? result_.max_deviation < result_.tolerance
                             : result_.max_deviation <= result_.tolerance;
    return std::move(result_);
  }

 private:
  PropertyResult result_;
  bool strict_;
};

std::string where(const std::string& tag, std::size_t K, std::size_t trial) {
  return tag + " K=" + std::to_string(K) + " trial=" + std::to_string(trial);
}

SuiteReport fim_suite(std::size_t trials, std::uint64_t seed) {
  SuiteReport report{"fim", seed, trials, {}};
  RandomSource rng(seed, 11);
  Property diagonal("catnat oracle FIM off-diagonal |G_ij|", 1e-10, true);
  Property catnat_agree("catnat analytic vs oracle FIM", 1e-10, true);
  Property softmax_agree("softmax analytic vs oracle FIM", 1e-12, true);
  Property in_band("natural in-band G_ii - P(a_i)(pi/A)^2", 1e-12, true);
  Property psd("analytic FIM min eigenvalue (negated)", 1e-10);
  Property singular("softmax ||G 1||_inf", 1e-12, true);

  for (std::size_t K : {2, 4, 8, 16, 32}) {
    const TreeShape shape(K);
    for (const auto& act : catnat_activations()) {
      const auto param = Parameterization::catnat(act);
      const double scale = std::pow(std::numbers::pi / act.width, 2);
      for (std::size_t t = 0; t < trials; ++t) {
        const ScoreVector s = uniform_scores(static_cast<Eigen::Index>(K - 1), -3.0, 3.0, rng);
        const FisherMatrix oracle = fim_oracle(s, param);
        const FisherMatrix analytic = fim_catnat_analytic(s, act, shape);
        const auto tag = where(act_name(act), K, t);
        diagonal.observe(oracle.max_abs_off_diagonal(), tag);
        catnat_agree.observe((analytic.entries - oracle.entries).cwiseAbs().maxCoeff(), tag);
        psd.observe(-analytic.min_eigenvalue(), tag);
        if (act.kind == ActivationKind::Natural) {
          const NodeActivations nodes = catnat_nodes(s, act, shape);
          for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (act.in_band(s[i])) in_band.observe(std::abs(oracle.entries(i, i) - nodes.path_prob[i] * scale), tag);
          }
        }
      }
    }
    if (K <= 16) {
      for (std::size_t t = 0; t < trials; ++t) {
        const ScoreVector s = uniform_scores(static_cast<Eigen::Index>(K), -3.0, 3.0, rng);
        const FisherMatrix analytic = fim_softmax_analytic(s);
        const auto tag = where("softmax", K, t);
        softmax_agree.observe(
            (analytic.entries - fim_oracle(s, Parameterization::softmax()).entries).cwiseAbs().maxCoeff(), tag);
        psd.observe(-analytic.min_eigenvalue(), tag);
        singular.observe((analytic.entries * Eigen::VectorXd::Ones(s.size())).cwiseAbs().maxCoeff(), tag);
      }
    }
  }

  for (auto* p : {&diagonal, &catnat_agree, &softmax_agree, &in_band, &psd, &singular}) {
    report.properties.push_back(p->finish());
  }
  return report;
}

SuiteReport kl_suite(std::size_t trials, std::uint64_t seed) {
  SuiteReport report{"kl", seed, trials, {}};
  RandomSource rng(seed, 16);
  Property kl("KL remainder ratio(1e-3) / ratio(1e-1)", 1e-2);
  Property kl_step("KL remainder ratio shrink per 10x step", 1e-1);

  // Third-order remainder of the quadratic KL approximation, K = 8: each
  // 10x shrink of ||ds|| must shrink the remainder ratio at least 10x.
  for (const auto& param : all_parameterizations()) {
    const Eigen::Index n = static_cast<Eigen::Index>(param.score_count(8));
    for (std::size_t t = 0; t < trials; ++t) {
      // Natural scores stay well inside the band so s + ds never crosses it.
      const ScoreVector s = uniform_scores(n, -2.0, 2.0, rng);
      Eigen::VectorXd dir(n);
      for (Eigen::Index i = 0; i < n; ++i) dir[i] = rng.normal();
      const double r1 = kl_remainder_pair_ratio(s, dir, 1e-1, param);
      const double r2 = kl_remainder_pair_ratio(s, dir, 1e-2, param);
      const double r3 = kl_remainder_pair_ratio(s, dir, 1e-3, param);
      const auto tag = where(param.name(), 8, t);
      kl_step.observe(std::max(r2 / r1, r3 / r2), tag);
      kl.observe(r3 / r1, tag);
    }
  }

  report.properties.push_back(kl_step.finish());
  report.properties.push_back(kl.finish());
  return report;
}

SuiteReport grad_suite(std::size_t trials, std::uint64_t seed) {
  SuiteReport report{"grad", seed, trials, {}};
  RandomSource rng(seed, 12);
  Property catnat_fd("catnat grad-log-prob vs central differences (rel)", 1e-5, true);
  Property softmax_fd("softmax grad-log-prob vs central differences (rel)", 1e-5, true);
  Property act_fd("activation derivative vs central differences (abs)", 1e-8, true);
  Property softmax_sum("softmax grad-log-prob entry sum", 1e-12, true);

  for (std::size_t K : {2, 4, 8}) {
    const TreeShape shape(K);
    for (const auto& act : catnat_activations()) {
      // Natural scores stay away from the saturation edges at +-pi.
      const double bound = act.kind == ActivationKind::Natural ? 2.5 : 3.0;
      for (std::size_t t = 0; t < trials; ++t) {
        const ScoreVector s = uniform_scores(static_cast<Eigen::Index>(K - 1), -bound, bound, rng);
        const std::size_t k = rng.below(K);
        const Eigen::VectorXd numeric =
            central_difference([&](const Eigen::VectorXd& v) { return catnat_log_prob(v, act, shape, k); }, s);
        catnat_fd.observe(relative_error(catnat_grad_log_prob(s, act, shape, k), numeric),
                          where(act_name(act), K, t));
      }
    }
    for (std::size_t t = 0; t < trials; ++t) {
      const ScoreVector s = uniform_scores(static_cast<Eigen::Index>(K), -3.0, 3.0, rng);
      const std::size_t k = rng.below(K);
      const Eigen::VectorXd analytic = softmax_grad_log_prob(s, k);
      const Eigen::VectorXd numeric = central_difference(
          [&](const Eigen::VectorXd& v) { return softmax_log_probs(v)[static_cast<Eigen::Index>(k)]; }, s);
      softmax_fd.observe(relative_error(analytic, numeric), where("softmax", K, t));
      softmax_sum.observe(std::abs(analytic.sum()), where("softmax", K, t));
    }
  }
  for (const auto& act : catnat_activations()) {
    for (std::size_t t = 0; t < trials; ++t) {
      const double x = -2.5 + 5.0 * rng.uniform();
      const double h = 1e-6;
      const double numeric = (act.eval(x + h) - act.eval(x - h)) / (2.0 * h);
      act_fd.observe(std::abs(act.grad(x) - numeric), std::string(act_name(act)) + " x=" + std::to_string(x));
    }
  }
  for (auto* p : {&catnat_fd, &softmax_fd, &act_fd, &softmax_sum}) report.properties.push_back(p->finish());
  return report;
}

SuiteReport param_suite(std::size_t trials, std::uint64_t seed) {
  SuiteReport report{"param", seed, trials, {}};
  RandomSource rng(seed, 13);
  Property simplex("probability vector |sum - 1|", 1e-12);
  Property positivity("negative / zero-probability violations", 0.0);
  Property rank("softmax rank-order violations", 0.0);
  Property marginal("catnat sum over leaves_under(i) - P(a_i)", 1e-12);
  Property sparsity("catnat gradient entries off the ancestor path", 0.0);
  Property consistency("exp(catnat_log_prob) - catnat_probs", 1e-10);
  Property sampler_z("descent sampler frequency z-score (100000 draws, K=8)", 4.0);
  Property sampler_chi("descent vs inverse-CDF chi-square p-value (negated margin)", 0.0);

  for (std::size_t K : {2, 4, 8, 16, 32}) {
    const TreeShape shape(K);
    for (std::size_t t = 0; t < trials; ++t) {
      const ScoreVector ss = uniform_scores(static_cast<Eigen::Index>(K), -5.0, 5.0, rng);
      const ProbabilityVector ps = softmax_probs(ss);
      simplex.observe(std::abs(ps.sum() - 1.0), where("softmax", K, t));
      positivity.observe(static_cast<double>((ps.array() <= 0.0).count()), where("softmax", K, t));
      std::size_t inversions = 0;
      for (Eigen::Index i = 0; i < ss.size(); ++i) {
        for (Eigen::Index j = 0; j < ss.size(); ++j) {
          if (ss[i] > ss[j] && !(ps[i] > ps[j])) ++inversions;
        }
      }
      rank.observe(static_cast<double>(inversions), where("softmax", K, t));

      for (const auto& act : catnat_activations()) {
        // Wide enough to reach natural-activation saturation.
        const ScoreVector s = uniform_scores(static_cast<Eigen::Index>(K - 1), -4.0, 4.0, rng);
        const CatnatOutput out = catnat_probs(s, act, shape);
        const auto tag = where(act_name(act), K, t);
        simplex.observe(std::abs(out.probs.sum() - 1.0), tag);
        positivity.observe(static_cast<double>((out.probs.array() < 0.0).count()), tag);
        for (std::size_t node = 1; node < K; ++node) {
          double total = 0.0;
          for (const auto& leaf : leaves_under(TreeIndex(node, shape), shape)) {
            total += out.probs[static_cast<Eigen::Index>(leaf.k)];
          }
          marginal.observe(std::abs(total - out.nodes.path_prob[static_cast<Eigen::Index>(node - 1)]), tag);
        }
        const std::size_t k = rng.below(K);
        const Eigen::VectorXd g = catnat_grad_log_prob(s, act, shape, k);
        std::size_t stray = 0;
        for (std::size_t node = 1; node < K; ++node) {
          if (!is_ancestor_of_category(node, k, shape) && g[static_cast<Eigen::Index>(node - 1)] != 0.0) ++stray;
        }
        sparsity.observe(static_cast<double>(stray), tag);
        // Self-consistency only where no node saturates the clamp.
        const ScoreVector u = uniform_scores(static_cast<Eigen::Index>(K - 1), -2.5, 2.5, rng);
        const ProbabilityVector pu = catnat_probs(u, act, shape).probs;
        consistency.observe((catnat_log_probs(u, act, shape).array().exp() - pu.array()).abs().maxCoeff(), tag);
      }
    }
  }

  // Sampler law: one large draw per activation (independent of trials).
  const std::size_t draws = 100000;
  const TreeShape shape(8);
  for (const auto& act : catnat_activations()) {
    const ScoreVector s = uniform_scores(7, -2.0, 2.0, rng);
    const ProbabilityVector p = catnat_probs(s, act, shape).probs;
    std::vector<std::size_t> descent(8, 0);
    std::vector<std::size_t> inverse(8, 0);
    for (std::size_t d = 0; d < draws; ++d) {
      ++descent[sample_catnat_descent(s, act, shape, rng)];
      ++inverse[sample_inverse_cdf(p, rng)];
    }
    sampler_z.observe(max_frequency_z(descent, p), act_name(act));
    const double pvalue = chi_square_homogeneity_pvalue(descent, inverse);
    sampler_chi.observe(pvalue > 0.001 ? 0.0 : 0.001 - pvalue, std::string(act_name(act)) +
                                                                 " p=" + std::to_string(pvalue));
  }

  for (auto* p : {&simplex, &positivity, &rank, &marginal, &sparsity, &consistency, &sampler_z, &sampler_chi}) {
    report.properties.push_back(p->finish());
  }
  return report;
}

SuiteReport estimator_suite(std::size_t trials, std::uint64_t seed) {
  SuiteReport report{"estimator", seed, trials, {}};
  RandomSource rng(seed, 14);
  Property unbiased("SFGE enumerated expectation - true gradient", 1e-10, true);
  Property constant("SFGE with constant loss (LOO)", 0.0);
  Property variance("fraction of instances where LOO variance > plain variance", 0.05);
  Property determinism("SFGE bit-identical under equal seeds (mismatches)", 0.0);
  Property gumbel_max("Gumbel-max hard sample frequency z-score (100000 draws, K=8)", 4.0);
  Property gumbel_simplex("relaxed sample |sum - 1|", 1e-9);
  Property gumbel_concentration("mean max coordinate tau=1 minus tau=0.1", 0.0);

  const std::size_t K = 4;
  for (const auto& param : all_parameterizations()) {
    const auto n = static_cast<Eigen::Index>(param.score_count(K));
    for (std::size_t t = 0; t < trials; ++t) {
      const ScoreVector s = uniform_scores(n, -2.0, 2.0, rng);
      std::vector<double> losses(K);
      for (auto& l : losses) l = -1.0 + 3.0 * rng.uniform();
      const Eigen::VectorXd truth = expected_loss_gradient(s, param, losses);
      for (std::size_t M : {2, 3}) {
        for (Baseline b : {Baseline::None, Baseline::LeaveOneOut}) {
          const Eigen::VectorXd mean = sfge_enumerated_expectation(s, param, losses, M, b);
          unbiased.observe((mean - truth).cwiseAbs().maxCoeff(), where(param.name(), K, t));
        }
      }
      RandomSource a(seed + t, 5);
      RandomSource b(seed + t, 5);
      const CategoryLoss loss = [&](std::size_t k) { return losses[k]; };
      const SfgeConfig cfg{4, Baseline::LeaveOneOut};
      const Eigen::VectorXd ga = sfge_grad(s, param, loss, cfg, a);
      const Eigen::VectorXd gb = sfge_grad(s, param, loss, cfg, b);
      determinism.observe(static_cast<double>((ga.array() != gb.array()).count()), where(param.name(), K, t));
      const Eigen::VectorXd zero = sfge_grad(s, param, [](std::size_t) { return 2.5; }, cfg, a);
      constant.observe(zero.cwiseAbs().maxCoeff(), where(param.name(), K, t));
    }
  }

  // Variance reduction of the leave-one-out baseline, K = 4, M = 4, exact
  // moments over all K^M draws. The share is a population statistic, so it
  // always uses 200 instances whatever `trials` is.
  const std::size_t instances = 200;
  for (const auto& param : all_parameterizations()) {
    const auto n = static_cast<Eigen::Index>(param.score_count(K));
    std::size_t worse = 0;
    for (std::size_t t = 0; t < instances; ++t) {
      const ScoreVector s = uniform_scores(n, -2.0, 2.0, rng);
      std::vector<double> losses(K);
      for (auto& l : losses) l = rng.uniform();
      const double plain = sfge_enumerated_moments(s, param, losses, 4, Baseline::None).total_variance;
      const double loo = sfge_enumerated_moments(s, param, losses, 4, Baseline::LeaveOneOut).total_variance;
      if (loo > plain) ++worse;
    }
    variance.observe(static_cast<double>(worse) / static_cast<double>(instances), param.name());
  }

  // Gumbel-softmax mechanics, K = 8.
  for (const auto& param : all_parameterizations()) {
    const auto n = static_cast<Eigen::Index>(param.score_count(8));
    const ScoreVector s = uniform_scores(n, -1.5, 1.5, rng);
    const ProbabilityVector p = param.probs(s);
    GumbelConfig cfg;
    cfg.tau = 0.5;
    std::vector<std::size_t> counts(8, 0);
    const std::size_t draws = 100000;
    for (std::size_t d = 0; d < draws; ++d) {
      const GumbelSample g = gumbel_softmax_sample(s, param, cfg, rng);
      ++counts[g.index];
      gumbel_simplex.observe(std::abs(g.relaxed.sum() - 1.0), param.name());
    }
    gumbel_max.observe(max_frequency_z(counts, p), param.name());

    double mean_max[2] = {0.0, 0.0};
    const double taus[2] = {1.0, 0.1};
    for (int i = 0; i < 2; ++i) {
      cfg.tau = taus[i];
      for (std::size_t d = 0; d < 10000; ++d) mean_max[i] += gumbel_softmax_sample(s, param, cfg, rng).relaxed.maxCoeff();
      mean_max[i] /= 10000.0;
    }
    gumbel_concentration.observe(mean_max[0] - mean_max[1], param.name());
  }

  for (auto* p : {&unbiased, &constant, &variance, &determinism, &gumbel_max, &gumbel_simplex, &gumbel_concentration}) {
    report.properties.push_back(p->finish());
  }
  return report;
}

}  // namespace

bool SuiteReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"fim", "kl", "grad", "param", "estimator"};
  return names;
}

SuiteReport run_suite(std::string_view name, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
  if (name == "fim") return fim_suite(trials, seed);
  if (name == "kl") return kl_suite(trials, seed);
  if (name == "grad") return grad_suite(trials, seed);
  if (name == "param") return param_suite(trials, seed);
  if (name == "estimator") return estimator_suite(trials, seed);
  throw Error(ErrorKind::InvalidArgument, "unknown suite '" + std::string(name) + "'");
}

std::vector<SuiteReport> run_suites(std::string_view name, std::size_t trials, std::uint64_t seed) {
  std::vector<SuiteReport> reports;
  if (name == "all") {
    for (const auto& s : suite_names()) reports.push_back(run_suite(s, trials, seed));
  } else {
    reports.push_back(run_suite(name, trials, seed));
  }
  return reports;
}

Eigen::VectorXd uniform_scores(Eigen::Index n, double lo, double hi, RandomSource& rng) {
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = lo + (hi - lo) * rng.uniform();
  return s;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  if (scale == 0.0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

Eigen::VectorXd expected_loss_gradient(const ScoreVector& s, const Parameterization& param,
                                       std::span<const double> losses) {
  const ProbabilityVector p = param.probs(s);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(s.size());
  for (std::size_t k = 0; k < losses.size(); ++k) {
    const double pk = p[static_cast<Eigen::Index>(k)];
    if (pk > 0.0) g += losses[k] * pk * param.grad_log_prob(s, k);
  }
  return g;
}

SfgeMoments sfge_enumerated_moments(const ScoreVector& s, const Parameterization& param,
                                    std::span<const double> losses, std::size_t M, Baseline baseline) {
  const ProbabilityVector p = param.probs(s);
  const std::size_t K = static_cast<std::size_t>(p.size());
  if (losses.size() != K) throw Error(ErrorKind::ShapeMismatch, "need one loss per category");
  const CategoryLoss loss = [&](std::size_t k) { return losses[k]; };
  std::vector<std::size_t> draws(M, 0);
  SfgeMoments out{Eigen::VectorXd::Zero(s.size()), 0.0};
  double second = 0.0;
  while (true) {
    double weight = 1.0;
    for (std::size_t k : draws) weight *= p[static_cast<Eigen::Index>(k)];
    if (weight > 0.0) {
      const Eigen::VectorXd g = sfge_from_draws(s, param, loss, draws, baseline);
      out.mean += weight * g;
      second += weight * g.squaredNorm();
    }
    // Odometer increment over {0..K-1}^M.
    std::size_t pos = 0;
    while (pos < M && ++draws[pos] == K) draws[pos++] = 0;
    if (pos == M) break;
  }
  out.total_variance = second - out.mean.squaredNorm();
  return out;
}

Eigen::VectorXd sfge_enumerated_expectation(const ScoreVector& s, const Parameterization& param,
                                            std::span<const double> losses, std::size_t M, Baseline baseline) {
  return sfge_enumerated_moments(s, param, losses, M, baseline).mean;
}

double chi_square_homogeneity_pvalue(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "count vectors differ in length");
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
  }
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i] + b[i]);
    if (col == 0.0) continue;
    ++cells;
    const double ea = col * na / (na + nb);
    const double eb = col * nb / (na + nb);
    stat += std::pow(static_cast<double>(a[i]) - ea, 2) / ea + std::pow(static_cast<double>(b[i]) - eb, 2) / eb;
  }
  if (cells < 2) return 1.0;
  const boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

double max_frequency_z(std::span<const std::size_t> counts, const ProbabilityVector& p) {
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  double worst = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double pk = p[static_cast<Eigen::Index>(k)];
    const double freq = static_cast<double>(counts[k]) / n;
    if (pk <= 0.0 || pk >= 1.0) {
      if (freq != pk) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, std::abs(freq - pk) / std::sqrt(pk * (1.0 - pk) / n));
  }
  return worst;
}

double kl_remainder_ratio(const ScoreVector& s, const Eigen::VectorXd& direction, double norm,
                          const Parameterization& param) {
  const Eigen::VectorXd ds = direction.normalized() * norm;
  const KlCheck kl = kl_quadratic_check(s, ds, param);
  return std::abs(kl.kl_exact - kl.kl_quad) / (norm * norm);
}

double kl_remainder_pair_ratio(const ScoreVector& s, const Eigen::VectorXd& direction, double norm,
                               const Parameterization& param) {
  return std::max(kl_remainder_ratio(s, direction, norm, param), kl_remainder_ratio(s, -direction, norm, param));
}

}  // namespace catnat::verify
