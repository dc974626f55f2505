#pragma once

// Randomised property suites over the param, fisher and estimators modules.
// Used by `catnat verify` and by the test binaries.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catnat/estimators.hpp"
#include "catnat/param.hpp"
#include "catnat/random.hpp"

namespace catnat::verify {

struct PropertyResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::vector<PropertyResult> properties;

  [[nodiscard]] bool passed() const;
};

// "fim", "kl", "grad", "param", "estimator".
const std::vector<std::string>& suite_names();

// Throws InvalidArgument for an unknown suite or trials == 0.
SuiteReport run_suite(std::string_view name, std::size_t trials, std::uint64_t seed);
// `name` may also be "all".
std::vector<SuiteReport> run_suites(std::string_view name, std::size_t trials, std::uint64_t seed);

// Building blocks shared with the tests.

Eigen::VectorXd uniform_scores(Eigen::Index n, double lo, double hi, RandomSource& rng);

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step = 1e-6);

// ||a - b||_inf / max(||a||_inf, ||b||_inf); 0 when both vanish.
double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// sum_k L_k p_k grad log p_k, the gradient of the expected loss.
Eigen::VectorXd expected_loss_gradient(const ScoreVector& s, const Parameterization& param,
                                       std::span<const double> losses);

struct SfgeMoments {
  Eigen::VectorXd mean;
  double total_variance = 0.0;  // trace of the covariance
};

// Exact moments of the score-function estimator over all K^M draws.
SfgeMoments sfge_enumerated_moments(const ScoreVector& s, const Parameterization& param,
                                    std::span<const double> losses, std::size_t M, Baseline baseline);
Eigen::VectorXd sfge_enumerated_expectation(const ScoreVector& s, const Parameterization& param,
                                            std::span<const double> losses, std::size_t M, Baseline baseline);

// Chi-square test of homogeneity for two count vectors; categories empty in
// both are dropped.
double chi_square_homogeneity_pvalue(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Largest |freq_k - p_k| / sqrt(p_k (1 - p_k) / n) over categories with
// 0 < p_k < 1; categories with p_k in {0, 1} must match exactly, else +inf.
double max_frequency_z(std::span<const std::size_t> counts, const ProbabilityVector& p);

// |KL_exact - 1/2 ds^T G ds| / ||ds||^2 along `direction` scaled to `norm`.
double kl_remainder_ratio(const ScoreVector& s, const Eigen::VectorXd& direction, double norm,
                          const Parameterization& param);
// Worst of kl_remainder_ratio over the antithetic pair +direction, -direction.
// The cubic term flips sign with the direction while the quartic term does
// not, so the pair maximum isolates the third-order behaviour.
double kl_remainder_pair_ratio(const ScoreVector& s, const Eigen::VectorXd& direction, double norm,
                               const Parameterization& param);

}  // namespace catnat::verify
