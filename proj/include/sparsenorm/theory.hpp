#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sparsenorm/activation.hpp"

namespace sparsenorm::theory {

enum class Family { normal, uniform };

/// Distributional setup for the expectation identities: i.i.d. weights with
/// per-layer mean mu_w^i, biases with mean mu_b^i, features with mean mu_x,
/// and MCAR Bernoulli(mu_m) masks on the input.
///
/// Weights, biases and features share one `spread` (standard deviation). With
/// the uniform family values lie on [mu - sqrt(3) spread, mu + sqrt(3) spread].
struct AssumptionConfig {
  std::vector<std::size_t> widths;
  Activation activation = Activation::identity();
  std::vector<double> weight_means;
  std::vector<double> bias_means;  // one per layer; ignored when use_bias is false
  bool use_bias = false;
  double feature_mean = 1.0;
  double mask_mean = 1.0;
  double spread = 0.0;
  Family family = Family::normal;

  std::size_t layers() const { return widths.empty() ? 0 : widths.size() - 1; }
  double bias_mean(std::size_t layer) const { return use_bias ? bias_means.at(layer) : 0.0; }

  // Throws std::invalid_argument; requires mu_w^i != 0 for every layer.
  void validate() const;
  // Canonical single-line description; `hash()` is FNV-1a over it.
  std::string describe() const;
  std::uint64_t hash() const;
};

struct SnSetting {
  enum class Kind { off, known_mu, estimated };
  Kind kind = Kind::off;
  double constant = 0.0;  // K_1 for known_mu, K for estimated

  static SnSetting off() { return {Kind::off, 0.0}; }
  // h0 * K1 / mu_m
  static SnSetting known_mu(double K1) { return {Kind::known_mu, K1}; }
  // h0 * K / max(||m||_1, 1)
  static SnSetting estimated(double K) { return {Kind::estimated, K}; }

  std::string describe() const;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

// Monte Carlo estimate of E[h_l^L], averaged over output coordinates. Trial t
// draws from stream (seed, t), so the result does not depend on the worker count.
Estimate estimate_expected_output(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed,
                                  SnSetting sn = SnSetting::off());

// Same draws as above, one estimate per output coordinate.
std::vector<Estimate> estimate_output_coordinates(const AssumptionConfig& cfg, std::size_t trials,
                                                  std::uint64_t seed, SnSetting sn = SnSetting::off());

// prod_i n_{i-1} mu_w^i * mu_x * mu_m; identity activation and no biases.
double theorem1_prediction(const AssumptionConfig& cfg);
// f_L o ... o f_1(mu_x mu_m) with f_i(x) = sigma(n_{i-1} mu_w^i x + mu_b^i); sigma affine.
double theorem2_prediction(const AssumptionConfig& cfg);
// The same composition for any activation, started at `x0`.
double compose_layers(const AssumptionConfig& cfg, double x0);

enum class TheoremId { T1, T2, T3, T4 };
std::string to_string(TheoremId id);

inline constexpr double kSigmas = 3.0;
inline constexpr double kAbsTolerance = 1e-3;

struct TheoremReport {
  TheoremId id = TheoremId::T1;
  std::uint64_t config_hash = 0;
  std::string label;
  double predicted = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  bool pass = false;
  std::string tolerance;
};

// |estimate - prediction| <= 3 SE + 1e-3.
TheoremReport check_theorem1(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed);
TheoremReport check_theorem2(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed);
// Lower bound: estimate + 3 SE + 1e-3 >= composed bound. Needs a convex
// non-decreasing activation and mu_w^i > 0.
TheoremReport check_theorem3(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed);

struct FlatnessReport {
  std::vector<double> mask_means;
  std::vector<Estimate> estimates;
  double predicted = 0.0;  // f(mu_x K_1); NaN when the activation is not affine
  double max_difference = 0.0;
  bool flat = false;
  bool matches_prediction = false;
  bool pass = false;
  std::string tolerance;

  // One row per grid point, all carrying the overall verdict.
  std::vector<TheoremReport> rows(std::uint64_t config_hash) const;
};

// Runs the estimator at each mu_m in the grid with SN applied. Flat when every
// pair differs by at most 3 * sqrt(se_a^2 + se_b^2) + 1e-3 (+ relative_tolerance
// * mean |estimate| for the relaxed check). For an affine activation with SN
// on, each estimate must also match f_L o ... o f_1(mu_x K_1) within 3 SE + 1e-3.
FlatnessReport check_theorem4_flatness(const AssumptionConfig& base, const std::vector<double>& mask_grid,
                                       std::size_t trials, std::uint64_t seed, SnSetting sn,
                                       double relative_tolerance = 0.0);

// Random valid configurations for the convex bound: 1-3 layers of width <=
// 6, mu_w in [0.05, 0.5], mu_m in [0.1, 1], spread in [0, 0.5]. Leaky slope and
// elu alpha are drawn too (alpha <= 1 keeps elu convex).
std::vector<AssumptionConfig> random_convex_configs(ActivationTag activation, std::size_t count,
                                                    std::uint64_t seed);

}  // namespace sparsenorm::theory
