#include "sparsenorm/theory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sparsenorm/parallel.hpp"
#include "sparsenorm/random.hpp"

namespace sparsenorm::theory {

namespace {

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Draws one value with mean mu and standard deviation `spread`.
class Sampler {
 public:
  Sampler(Family family, double spread, Rng& rng) : family_(family), spread_(spread), rng_(rng) {}

  double operator()(double mu) {
    if (spread_ == 0.0) return mu;
    if (family_ == Family::normal) return mu + spread_ * normal_(rng_);
    return mu + spread_ * std::sqrt(3.0) * (2.0 * unit_(rng_) - 1.0);
  }

 private:
  Family family_;
  double spread_;
  Rng& rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

// One Monte Carlo trial; writes the output layer into `out`.
void run_trial(const AssumptionConfig& cfg, SnSetting sn, std::uint64_t seed, std::size_t trial,
               std::vector<double>& out) {
  Rng rng = make_rng(seed, trial);
  Sampler draw(cfg.family, cfg.spread, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::size_t n0 = cfg.widths[0];
  std::vector<double> h(n0);
  double observed = 0.0;
  for (std::size_t j = 0; j < n0; ++j) {
    double feature = draw(cfg.feature_mean);
    double m = unit(rng) < cfg.mask_mean ? 1.0 : 0.0;
    observed += m;
    h[j] = feature * m;
  }
  double factor = 1.0;
  if (sn.kind == SnSetting::Kind::known_mu) factor = sn.constant / cfg.mask_mean;
  if (sn.kind == SnSetting::Kind::estimated) factor = sn.constant / std::max(observed, 1.0);
  if (factor != 1.0)
    for (double& v : h) v *= factor;

  std::vector<double> next;
  for (std::size_t i = 0; i < cfg.layers(); ++i) {
    std::size_t rows = cfg.widths[i + 1];
    next.assign(rows, 0.0);
    double mu_w = cfg.weight_means[i];
    for (std::size_t r = 0; r < rows; ++r) {
      double z = 0.0;
      for (std::size_t c = 0; c < h.size(); ++c) z += draw(mu_w) * h[c];
      if (cfg.use_bias) z += draw(cfg.bias_means[i]);
      next[r] = cfg.activation(z);
    }
    h.swap(next);
  }
  out = h;
}

Estimate summarize(const std::vector<double>& samples) {
  Estimate e;
  e.trials = samples.size();
  double sum = 0.0;
  for (double v : samples) sum += v;
  e.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - e.mean) * (v - e.mean);
    double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    e.std_error = sd / std::sqrt(static_cast<double>(samples.size()));
  }
  return e;
}

void check_sn(const AssumptionConfig& cfg, SnSetting sn) {
  if (sn.kind == SnSetting::Kind::known_mu && cfg.mask_mean == 0.0)
    throw std::invalid_argument("known-mu sparsity normalization needs mu_m > 0");
  if (sn.kind != SnSetting::Kind::off && !std::isfinite(sn.constant))
    throw std::invalid_argument("sparsity normalization constant must be finite");
}

std::string tolerance_text() { return "abs<=" + num(kSigmas) + "se+" + num(kAbsTolerance); }

}  // namespace

void AssumptionConfig::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("need at least one layer");
  for (std::size_t w : widths)
    if (w == 0) throw std::invalid_argument("widths must be >= 1");
  if (weight_means.size() != layers()) throw std::invalid_argument("need one weight mean per layer");
  for (double m : weight_means)
    if (m == 0.0 || !std::isfinite(m)) throw std::invalid_argument("weight means must be finite and nonzero");
  if (use_bias && bias_means.size() != layers()) throw std::invalid_argument("need one bias mean per layer");
  if (!(mask_mean >= 0.0 && mask_mean <= 1.0)) throw std::invalid_argument("mask mean must be in [0, 1]");
  if (!(spread >= 0.0) || !std::isfinite(spread)) throw std::invalid_argument("spread must be finite and >= 0");
  if (!std::isfinite(feature_mean)) throw std::invalid_argument("feature mean must be finite");
}

std::string AssumptionConfig::describe() const {
  std::ostringstream out;
  out << "widths=";
  for (std::size_t i = 0; i < widths.size(); ++i) out << (i ? "," : "") << widths[i];
  out << ";act=" << activation.to_string() << ";mu_w=";
  for (std::size_t i = 0; i < weight_means.size(); ++i) out << (i ? "," : "") << num(weight_means[i]);
  out << ";bias=" << (use_bias ? "on" : "off");
  if (use_bias) {
    out << ";mu_b=";
    for (std::size_t i = 0; i < bias_means.size(); ++i) out << (i ? "," : "") << num(bias_means[i]);
  }
  out << ";mu_x=" << num(feature_mean) << ";mu_m=" << num(mask_mean) << ";spread=" << num(spread)
      << ";family=" << (family == Family::normal ? "normal" : "uniform");
  return out.str();
}

std::uint64_t AssumptionConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : describe()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string SnSetting::describe() const {
  switch (kind) {
    case Kind::off: return "off";
    case Kind::known_mu: return "known_mu(" + num(constant) + ")";
    case Kind::estimated: return "estimated(" + num(constant) + ")";
  }
  return "off";
}

std::vector<Estimate> estimate_output_coordinates(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed,
                                                  SnSetting sn) {
  cfg.validate();
  check_sn(cfg, sn);
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  std::size_t outputs = cfg.widths.back();
  std::vector<double> samples(trials * outputs);
  parallel_for(trials, [&](std::size_t t) {
    std::vector<double> out;
    run_trial(cfg, sn, seed, t, out);
    std::copy(out.begin(), out.end(), samples.begin() + static_cast<std::ptrdiff_t>(t * outputs));
  });
  std::vector<Estimate> result;
  std::vector<double> column(trials);
  for (std::size_t l = 0; l < outputs; ++l) {
    for (std::size_t t = 0; t < trials; ++t) column[t] = samples[t * outputs + l];
    result.push_back(summarize(column));
  }
  return result;
}

Estimate estimate_expected_output(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed, SnSetting sn) {
  cfg.validate();
  check_sn(cfg, sn);
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  std::vector<double> per_trial(trials);
  parallel_for(trials, [&](std::size_t t) {
    std::vector<double> out;
    run_trial(cfg, sn, seed, t, out);
    double sum = 0.0;
    for (double v : out) sum += v;
    per_trial[t] = sum / static_cast<double>(out.size());
  });
  return summarize(per_trial);
}

double theorem1_prediction(const AssumptionConfig& cfg) {
  cfg.validate();
  if (cfg.activation.tag() != ActivationTag::identity &&
      !(cfg.activation.tag() == ActivationTag::affine && cfg.activation.scale() == 1.0 && cfg.activation.shift() == 0.0))
    throw std::invalid_argument("the product identity needs the identity activation");
  if (cfg.use_bias) throw std::invalid_argument("the product identity needs biases fixed at zero");
  double p = cfg.feature_mean * cfg.mask_mean;
  for (std::size_t i = 0; i < cfg.layers(); ++i) p *= static_cast<double>(cfg.widths[i]) * cfg.weight_means[i];
  return p;
}

double compose_layers(const AssumptionConfig& cfg, double x0) {
  double x = x0;
  for (std::size_t i = 0; i < cfg.layers(); ++i)
    x = cfg.activation(static_cast<double>(cfg.widths[i]) * cfg.weight_means[i] * x + cfg.bias_mean(i));
  return x;
}

double theorem2_prediction(const AssumptionConfig& cfg) {
  cfg.validate();
  if (!cfg.activation.is_affine()) throw std::invalid_argument("the composed-map identity needs an affine activation");
  return compose_layers(cfg, cfg.feature_mean * cfg.mask_mean);
}

std::string to_string(TheoremId id) {
  switch (id) {
    case TheoremId::T1: return "T1";
    case TheoremId::T2: return "T2";
    case TheoremId::T3: return "T3";
    case TheoremId::T4: return "T4";
  }
  return "T?";
}

namespace {

TheoremReport exactness_report(TheoremId id, const AssumptionConfig& cfg, double predicted, std::size_t trials,
                               std::uint64_t seed) {
  Estimate e = estimate_expected_output(cfg, trials, seed);
  TheoremReport r;
  r.id = id;
  r.config_hash = cfg.hash();
  r.label = cfg.describe();
  r.predicted = predicted;
  r.estimate = e.mean;
  r.std_error = e.std_error;
  r.trials = e.trials;
  r.pass = std::abs(e.mean - predicted) <= kSigmas * e.std_error + kAbsTolerance;
  r.tolerance = tolerance_text();
  return r;
}

}  // namespace

TheoremReport check_theorem1(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed) {
  return exactness_report(TheoremId::T1, cfg, theorem1_prediction(cfg), trials, seed);
}

TheoremReport check_theorem2(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed) {
  return exactness_report(TheoremId::T2, cfg, theorem2_prediction(cfg), trials, seed);
}

TheoremReport check_theorem3(const AssumptionConfig& cfg, std::size_t trials, std::uint64_t seed) {
  cfg.validate();
  if (!cfg.activation.is_convex_nondecreasing() || cfg.activation.tag() == ActivationTag::identity ||
      cfg.activation.tag() == ActivationTag::affine)
    throw std::invalid_argument("the lower bound needs relu, leaky_relu, elu (alpha <= 1) or softplus");
  for (double m : cfg.weight_means)
    if (!(m > 0.0)) throw std::invalid_argument("the lower bound needs mu_w > 0 on every layer");
  Estimate e = estimate_expected_output(cfg, trials, seed);
  TheoremReport r;
  r.id = TheoremId::T3;
  r.config_hash = cfg.hash();
  r.label = cfg.describe();
  r.predicted = compose_layers(cfg, cfg.feature_mean * cfg.mask_mean);
  r.estimate = e.mean;
  r.std_error = e.std_error;
  r.trials = e.trials;
  r.pass = e.mean + kSigmas * e.std_error + kAbsTolerance >= r.predicted;
  r.tolerance = "estimate+" + num(kSigmas) + "se+" + num(kAbsTolerance) + ">=bound";
  return r;
}

FlatnessReport check_theorem4_flatness(const AssumptionConfig& base, const std::vector<double>& mask_grid,
                                       std::size_t trials, std::uint64_t seed, SnSetting sn,
                                       double relative_tolerance) {
  if (mask_grid.size() < 2) throw std::invalid_argument("flatness check needs at least two mask means");
  for (double mu : mask_grid)
    if (sn.kind == SnSetting::Kind::known_mu && mu == 0.0)
      throw std::invalid_argument("known-mu sparsity normalization cannot use mu_m = 0");

  FlatnessReport report;
  report.mask_means = mask_grid;
  double mean_abs = 0.0;
  for (std::size_t g = 0; g < mask_grid.size(); ++g) {
    AssumptionConfig cfg = base;
    cfg.mask_mean = mask_grid[g];
    // Same seed at every grid point: common random numbers across mu_m.
    report.estimates.push_back(estimate_expected_output(cfg, trials, seed, sn));
    mean_abs += std::abs(report.estimates.back().mean);
  }
  mean_abs /= static_cast<double>(mask_grid.size());

  report.flat = true;
  for (std::size_t a = 0; a < report.estimates.size(); ++a) {
    for (std::size_t b = a + 1; b < report.estimates.size(); ++b) {
      const Estimate& ea = report.estimates[a];
      const Estimate& eb = report.estimates[b];
      double diff = std::abs(ea.mean - eb.mean);
      report.max_difference = std::max(report.max_difference, diff);
      double allowed = kSigmas * std::hypot(ea.std_error, eb.std_error) + kAbsTolerance + relative_tolerance * mean_abs;
      if (diff > allowed) report.flat = false;
    }
  }

  bool exact_case = base.activation.is_affine() && sn.kind != SnSetting::Kind::off;
  if (exact_case) {
    double K1 = sn.kind == SnSetting::Kind::known_mu ? sn.constant : sn.constant / static_cast<double>(base.widths[0]);
    report.predicted = compose_layers(base, base.feature_mean * K1);
    report.matches_prediction = true;
    for (const Estimate& e : report.estimates) {
      double allowed = kSigmas * e.std_error + kAbsTolerance + relative_tolerance * std::abs(report.predicted);
      if (std::abs(e.mean - report.predicted) > allowed) report.matches_prediction = false;
    }
  } else {
    report.predicted = std::numeric_limits<double>::quiet_NaN();
    report.matches_prediction = true;  // no closed form to compare against
  }
  report.pass = report.flat && report.matches_prediction;
  report.tolerance = "pairwise<=" + num(kSigmas) + "se+" + num(kAbsTolerance);
  if (relative_tolerance > 0.0) report.tolerance += "+" + num(relative_tolerance) + "rel";
  report.tolerance += ";sn=" + sn.describe();
  return report;
}

std::vector<TheoremReport> FlatnessReport::rows(std::uint64_t config_hash) const {
  std::vector<TheoremReport> out;
  for (std::size_t g = 0; g < estimates.size(); ++g) {
    TheoremReport r;
    r.id = TheoremId::T4;
    r.config_hash = config_hash;
    r.label = "mu_m=" + num(mask_means[g]);
    r.predicted = predicted;
    r.estimate = estimates[g].mean;
    r.std_error = estimates[g].std_error;
    r.trials = estimates[g].trials;
    r.pass = pass;
    r.tolerance = tolerance;
    out.push_back(r);
  }
  return out;
}

std::vector<AssumptionConfig> random_convex_configs(ActivationTag activation, std::size_t count, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x7e3);
  std::uniform_int_distribution<std::size_t> depth(1, 3), width(1, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<AssumptionConfig> configs;
  for (std::size_t k = 0; k < count; ++k) {
    AssumptionConfig cfg;
    switch (activation) {
      case ActivationTag::relu: cfg.activation = Activation::relu(); break;
      case ActivationTag::leaky_relu: cfg.activation = Activation::leaky_relu(0.01 + 0.49 * u(rng)); break;
      case ActivationTag::elu: cfg.activation = Activation::elu(0.2 + 0.8 * u(rng)); break;
      case ActivationTag::softplus: cfg.activation = Activation::softplus(); break;
      default: throw std::invalid_argument("random_convex_configs: activation must be relu/leaky_relu/elu/softplus");
    }
    std::size_t L = depth(rng);
    cfg.widths.push_back(width(rng) + 1);
    for (std::size_t i = 0; i < L; ++i) cfg.widths.push_back(i + 1 == L ? 1 + width(rng) / 3 : width(rng));
    cfg.use_bias = u(rng) < 0.7;
    for (std::size_t i = 0; i < L; ++i) {
      cfg.weight_means.push_back(0.05 + 0.45 * u(rng));
      cfg.bias_means.push_back(u(rng) - 0.5);
    }
    cfg.feature_mean = 3.0 * u(rng) - 1.0;
    cfg.mask_mean = 0.1 + 0.9 * u(rng);
    cfg.spread = 0.5 * u(rng);
    cfg.family = u(rng) < 0.5 ? Family::normal : Family::uniform;
    configs.push_back(std::move(cfg));
  }
  return configs;
}

}  // namespace sparsenorm::theory
