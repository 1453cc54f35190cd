#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "sparsenorm/theory.hpp"

namespace sparsenorm::theory {
namespace {

AssumptionConfig linear_config() {
  AssumptionConfig cfg;
  cfg.widths = {3, 1};
  cfg.activation = Activation::identity();
  cfg.weight_means = {0.5};
  cfg.feature_mean = 2.0;
  cfg.mask_mean = 0.5;
  cfg.spread = 0.1;
  return cfg;
}

bool within(const Estimate& e, double target, double sigmas = 3.0) {
  return std::abs(e.mean - target) <= sigmas * e.std_error + kAbsTolerance;
}

TEST(ProductIdentity, Predictions) {
  EXPECT_DOUBLE_EQ(theorem1_prediction(linear_config()), 1.5);
  AssumptionConfig two = linear_config();
  two.widths = {4, 3, 1};
  two.weight_means = {0.5, 0.25};
  two.feature_mean = 1.0;
  EXPECT_DOUBLE_EQ(theorem1_prediction(two), 0.75);
  AssumptionConfig full = two;
  full.mask_mean = 1.0;
  EXPECT_DOUBLE_EQ(theorem1_prediction(full) / theorem1_prediction(two), 2.0);
}

TEST(ProductIdentity, Preconditions) {
  AssumptionConfig cfg = linear_config();
  cfg.activation = Activation::relu();
  EXPECT_THROW(theorem1_prediction(cfg), std::invalid_argument);
  cfg = linear_config();
  cfg.use_bias = true;
  cfg.bias_means = {0.0};
  EXPECT_THROW(theorem1_prediction(cfg), std::invalid_argument);
  cfg = linear_config();
  cfg.weight_means = {0.0};
  EXPECT_THROW(theorem1_prediction(cfg), std::invalid_argument);
}

TEST(Estimator, AllMissingGivesExactZero) {
  AssumptionConfig cfg = linear_config();
  cfg.mask_mean = 0.0;
  Estimate e = estimate_expected_output(cfg, 1000, 1);
  EXPECT_EQ(e.mean, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(Estimator, MatchesProductIdentity) {
  Estimate e = estimate_expected_output(linear_config(), 100000, 11);
  EXPECT_TRUE(within(e, 1.5)) << e.mean << " +- " << e.std_error;
}

TEST(Estimator, KnownMuSnRemovesMaskDependence) {
  for (double mu : {0.25, 0.5, 0.75}) {
    AssumptionConfig cfg = linear_config();
    cfg.mask_mean = mu;
    Estimate e = estimate_expected_output(cfg, 100000, 3, SnSetting::known_mu(1.0));
    EXPECT_TRUE(within(e, 3.0)) << "mu_m=" << mu << ": " << e.mean << " +- " << e.std_error;
  }
  AssumptionConfig zero = linear_config();
  zero.mask_mean = 0.0;
  EXPECT_THROW(estimate_expected_output(zero, 10, 0, SnSetting::known_mu(1.0)), std::invalid_argument);
}

TEST(Estimator, ZeroSpreadFullMaskIsExact) {
  // With every distribution degenerate the estimator is deterministic.
  AssumptionConfig cfg = linear_config();
  cfg.widths = {4, 3, 1};
  cfg.weight_means = {0.5, 0.25};
  cfg.spread = 0.0;
  cfg.mask_mean = 1.0;
  for (std::size_t trials : {1u, 7u, 1000u}) {
    Estimate e = estimate_expected_output(cfg, trials, 5);
    EXPECT_LT(std::abs(e.mean - theorem1_prediction(cfg)) / theorem1_prediction(cfg), 1e-10);
  }
}

TEST(Estimator, DeterministicAcrossWorkerCounts) {
  AssumptionConfig cfg = linear_config();
  cfg.widths = {5, 4, 2};
  cfg.weight_means = {0.3, -0.4};
  cfg.activation = Activation::softplus();
  setenv("SPARSENORM_THREADS", "1", 1);
  Estimate a = estimate_expected_output(cfg, 5000, 77);
  setenv("SPARSENORM_THREADS", "4", 1);
  Estimate b = estimate_expected_output(cfg, 5000, 77);
  setenv("SPARSENORM_THREADS", "1", 1);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(Estimator, OutputCoordinatesAreExchangeable) {
  AssumptionConfig cfg = linear_config();
  cfg.widths = {4, 3};
  cfg.activation = Activation::relu();
  cfg.use_bias = true;
  cfg.bias_means = {0.1};
  cfg.spread = 0.4;
  auto coords = estimate_output_coordinates(cfg, 40000, 9);
  ASSERT_EQ(coords.size(), 3u);
  for (std::size_t a = 0; a < coords.size(); ++a)
    for (std::size_t b = a + 1; b < coords.size(); ++b)
      EXPECT_LE(std::abs(coords[a].mean - coords[b].mean),
                3.5 * std::hypot(coords[a].std_error, coords[b].std_error) + kAbsTolerance);
}

TEST(Estimator, UniformFamilyHasSameMeanIdentity) {
  AssumptionConfig cfg = linear_config();
  cfg.family = Family::uniform;
  cfg.spread = 0.3;
  EXPECT_TRUE(within(estimate_expected_output(cfg, 100000, 21), 1.5));
}

TEST(Estimator, MonotoneInMaskMean) {
  AssumptionConfig cfg = linear_config();
  Estimate prev{};
  bool first = true;
  for (double mu : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    cfg.mask_mean = mu;
    Estimate e = estimate_expected_output(cfg, 20000, 4);
    if (!first) {
      EXPECT_GT(e.mean - prev.mean, 3.0 * std::hypot(e.std_error, prev.std_error));
    }
    prev = e;
    first = false;
  }
}

TEST(ComposedMap, Predictions) {
  AssumptionConfig cfg;
  cfg.widths = {2, 1};
  cfg.activation = Activation::affine(1.0, 1.0);
  cfg.weight_means = {0.5};
  cfg.use_bias = true;
  cfg.bias_means = {0.0};
  cfg.feature_mean = 1.0;
  cfg.mask_mean = 0.5;
  EXPECT_DOUBLE_EQ(theorem2_prediction(cfg), 1.5);

  cfg.mask_mean = 0.0;
  cfg.activation = Activation::affine(1.0, 0.7);
  cfg.widths = {2, 2, 1};
  cfg.weight_means = {0.5, 0.3};
  cfg.bias_means = {0.0, 0.0};
  // f_1(0) = 0.7, f_2(0.7) = 2 * 0.3 * 0.7 + 0.7
  EXPECT_DOUBLE_EQ(theorem2_prediction(cfg), 2 * 0.3 * 0.7 + 0.7);

  cfg.activation = Activation::relu();
  EXPECT_THROW(theorem2_prediction(cfg), std::invalid_argument);
}

TEST(ComposedMap, ScaledIdentityIsProductTimesTwoToTheL) {
  AssumptionConfig cfg = linear_config();
  cfg.widths = {4, 3, 1};
  cfg.weight_means = {0.5, 0.25};
  double t1 = theorem1_prediction(cfg);
  cfg.activation = Activation::affine(2.0, 0.0);
  EXPECT_DOUBLE_EQ(theorem2_prediction(cfg), t1 * 4.0);
  cfg.activation = Activation::affine(1.0, 0.0);
  EXPECT_EQ(theorem2_prediction(cfg), t1);
}

TEST(ComposedMap, MonteCarloWithBias) {
  AssumptionConfig cfg;
  cfg.widths = {4, 3, 2};
  cfg.activation = Activation::affine(0.8, 0.3);
  cfg.weight_means = {0.4, -0.6};
  cfg.use_bias = true;
  cfg.bias_means = {0.2, -0.1};
  cfg.feature_mean = 1.5;
  cfg.mask_mean = 0.6;
  cfg.spread = 0.2;
  TheoremReport r = check_theorem2(cfg, 100000, 8);
  EXPECT_TRUE(r.pass) << r.estimate << " vs " << r.predicted;
}

TEST(ConvexBound, SoftplusExample) {
  AssumptionConfig cfg;
  cfg.widths = {5, 4, 1};
  cfg.activation = Activation::softplus();
  cfg.weight_means = {0.3, 0.3};
  cfg.use_bias = true;
  cfg.bias_means = {0.1, 0.1};
  cfg.feature_mean = 1.0;
  cfg.mask_mean = 0.6;
  cfg.spread = 0.2;
  TheoremReport r = check_theorem3(cfg, 100000, 1);
  EXPECT_TRUE(r.pass) << r.estimate << " vs bound " << r.predicted;
  EXPECT_GT(r.estimate, r.predicted);
}

TEST(ConvexBound, ReluDegenerateIsTight) {
  // Everything positive: relu is linear on the attained range, so the bound is
  // attained in expectation.
  AssumptionConfig cfg;
  cfg.widths = {6, 3, 1};
  cfg.activation = Activation::relu();
  cfg.weight_means = {0.2, 0.4};
  cfg.feature_mean = 1.0;
  cfg.mask_mean = 0.5;
  cfg.spread = 0.0;
  TheoremReport r = check_theorem3(cfg, 50000, 2);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(std::abs(r.estimate - r.predicted), 3 * r.std_error + kAbsTolerance);
}

TEST(ConvexBound, RandomGridAllPass) {
  for (auto tag : {ActivationTag::relu, ActivationTag::leaky_relu, ActivationTag::elu, ActivationTag::softplus}) {
    auto configs = random_convex_configs(tag, 20, 99);
    for (std::size_t k = 0; k < configs.size(); ++k) {
      TheoremReport r = check_theorem3(configs[k], 5000, k);
      EXPECT_TRUE(r.pass) << r.label;
    }
  }
}

TEST(ConvexBound, Preconditions) {
  AssumptionConfig cfg = linear_config();
  cfg.activation = Activation::relu();
  cfg.weight_means = {-0.5};
  EXPECT_THROW(check_theorem3(cfg, 10, 0), std::invalid_argument);
  cfg.weight_means = {0.5};
  cfg.activation = Activation::sigmoid();
  EXPECT_THROW(check_theorem3(cfg, 10, 0), std::invalid_argument);
}

TEST(SnFlatness, KnownMuIsFlatAndMatches) {
  AssumptionConfig cfg = linear_config();
  auto report = check_theorem4_flatness(cfg, {0.25, 0.5, 0.75}, 100000, 6, SnSetting::known_mu(1.0));
  EXPECT_TRUE(report.flat);
  EXPECT_TRUE(report.matches_prediction);
  EXPECT_DOUBLE_EQ(report.predicted, 3.0);
  EXPECT_TRUE(report.pass);
  EXPECT_EQ(report.rows(cfg.hash()).size(), 3u);
}

TEST(SnFlatness, NegativeControlWithoutSn) {
  AssumptionConfig cfg = linear_config();
  auto report = check_theorem4_flatness(cfg, {0.25, 0.5, 0.75}, 100000, 6, SnSetting::off());
  EXPECT_FALSE(report.pass);
  EXPECT_NEAR(report.estimates[2].mean / report.estimates[0].mean, 3.0, 0.1);
}

TEST(SnFlatness, EstimatedKRelaxedFlatness) {
  AssumptionConfig cfg;
  cfg.widths = {20, 4, 1};
  cfg.activation = Activation::relu();
  cfg.weight_means = {0.1, 0.3};
  cfg.use_bias = true;
  cfg.bias_means = {0.05, 0.0};
  cfg.feature_mean = 1.0;
  cfg.spread = 0.2;
  auto report = check_theorem4_flatness(cfg, {0.3, 0.5, 0.7, 0.9}, 40000, 3, SnSetting::estimated(20.0 * 1.0), 0.05);
  EXPECT_TRUE(report.flat) << report.max_difference;
  EXPECT_TRUE(std::isnan(report.predicted));
}

TEST(SnFlatness, RejectsZeroInGridForKnownMu) {
  EXPECT_THROW(check_theorem4_flatness(linear_config(), {0.0, 0.5}, 10, 0, SnSetting::known_mu(1.0)),
               std::invalid_argument);
}

TEST(Config, HashIsStableAndSensitive) {
  AssumptionConfig a = linear_config(), b = linear_config();
  EXPECT_EQ(a.hash(), b.hash());
  b.mask_mean = 0.51;
  EXPECT_NE(a.hash(), b.hash());
}

}  // namespace
}  // namespace sparsenorm::theory
