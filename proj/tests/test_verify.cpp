#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "catnat/error.hpp"
#include "catnat/verify.hpp"

using namespace catnat;
using namespace catnat::verify;

class Suite : public ::testing::TestWithParam<const char*> {};

TEST_P(Suite, PassesAtModestTrialCount) {
  const SuiteReport report = run_suite(GetParam(), 20, 7);
  EXPECT_EQ(report.suite, GetParam());
  EXPECT_EQ(report.seed, 7u);
  ASSERT_FALSE(report.properties.empty());
  for (const auto& p : report.properties) {
    EXPECT_TRUE(p.passed) << p.name << ": " << p.max_deviation << " > " << p.tolerance << " " << p.detail;
  }
  EXPECT_TRUE(report.passed());
}

INSTANTIATE_TEST_SUITE_P(Names, Suite, ::testing::Values("fim", "grad", "param", "estimator"));

TEST(Suites, NamesAndAll) {
  const auto& names = suite_names();
  EXPECT_EQ(names, (std::vector<std::string>{"fim", "kl", "grad", "param", "estimator"}));
  EXPECT_EQ(run_suites("grad", 2, 1).size(), 1u);
}

TEST(Suites, ReportsAreReproducible) {
  const SuiteReport a = run_suite("fim", 5, 3);
  const SuiteReport b = run_suite("fim", 5, 3);
  ASSERT_EQ(a.properties.size(), b.properties.size());
  for (std::size_t i = 0; i < a.properties.size(); ++i) {
    EXPECT_EQ(a.properties[i].max_deviation, b.properties[i].max_deviation);
  }
}

TEST(Suites, RejectsBadArguments) {
  EXPECT_THROW(run_suite("nope", 10, 0), Error);
  EXPECT_THROW(run_suite("fim", 0, 0), Error);
  EXPECT_THROW(run_suites("nope", 10, 0), Error);
}

TEST(Helpers, CentralDifferenceOnQuadratic) {
  const Eigen::Vector3d x(1.0, -2.0, 0.5);
  const auto f = [](const Eigen::VectorXd& v) { return v.squaredNorm() + 3.0 * v[0] * v[1]; };
  const Eigen::VectorXd g = central_difference(f, x);
  EXPECT_NEAR(g[0], 2.0 * x[0] + 3.0 * x[1], 1e-8);
  EXPECT_NEAR(g[1], 2.0 * x[1] + 3.0 * x[0], 1e-8);
  EXPECT_NEAR(g[2], 2.0 * x[2], 1e-8);
}

TEST(Helpers, RelativeError) {
  EXPECT_EQ(relative_error(Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1)), 0.5);
}

TEST(Helpers, ChiSquareHomogeneity) {
  const std::vector<std::size_t> a{100, 200, 300, 0};
  EXPECT_NEAR(chi_square_homogeneity_pvalue(a, a), 1.0, 1e-12);
  const std::vector<std::size_t> b{300, 200, 100, 0};
  EXPECT_LT(chi_square_homogeneity_pvalue(a, b), 1e-10);
  // 2x2 table with counts (10, 20) vs (20, 10): statistic 20/3 on one dof.
  const std::vector<std::size_t> c{10, 20};
  const std::vector<std::size_t> d{20, 10};
  EXPECT_NEAR(chi_square_homogeneity_pvalue(c, d), std::erfc(std::sqrt(20.0 / 3.0 / 2.0)), 1e-12);
}

TEST(Helpers, MaxFrequencyZ) {
  const ProbabilityVector p = Eigen::Vector3d(0.5, 0.5, 0.0);
  const std::vector<std::size_t> exact{50, 50, 0};
  EXPECT_EQ(max_frequency_z(exact, p), 0.0);
  const std::vector<std::size_t> leak{50, 49, 1};
  EXPECT_EQ(max_frequency_z(leak, p), std::numeric_limits<double>::infinity());
  const std::vector<std::size_t> off{60, 40, 0};
  EXPECT_NEAR(max_frequency_z(off, p), 0.1 / std::sqrt(0.25 / 100.0), 1e-12);
}

TEST(Helpers, EnumeratedMomentsOnTwoCategories) {
  // K = 2, M = 1, no baseline: the estimator is L_k grad log p_k with
  // probability p_k, so its variance is closed form.
  const Parameterization softmax = Parameterization::softmax();
  const ScoreVector s = Eigen::Vector2d(0.3, -0.4);
  const ProbabilityVector p = softmax.probs(s);
  const std::vector<double> losses{1.5, -0.5};
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  double second = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const Eigen::VectorXd g = losses[k] * softmax.grad_log_prob(s, k);
    mean += p[static_cast<Eigen::Index>(k)] * g;
    second += p[static_cast<Eigen::Index>(k)] * g.squaredNorm();
  }
  const SfgeMoments m = sfge_enumerated_moments(s, softmax, losses, 1, Baseline::None);
  EXPECT_LT((m.mean - mean).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(m.total_variance, second - mean.squaredNorm(), 1e-14);
  // A constant loss has zero variance under the leave-one-out baseline.
  const std::vector<double> flat{2.0, 2.0};
  EXPECT_NEAR(sfge_enumerated_moments(s, softmax, flat, 3, Baseline::LeaveOneOut).total_variance, 0.0, 1e-15);
}

TEST(Helpers, UniformScoresInRange) {
  RandomSource rng(1);
  const Eigen::VectorXd s = uniform_scores(1000, -2.0, 3.0, rng);
  EXPECT_GE(s.minCoeff(), -2.0);
  EXPECT_LT(s.maxCoeff(), 3.0);
  EXPECT_NEAR(s.mean(), 0.5, 0.15);
}
