#include "sparsenorm/verify_suite.hpp"

#include <cmath>
#include <stdexcept>

#include "sparsenorm/csv.hpp"

namespace sparsenorm::theory {

namespace {

AssumptionConfig linear(std::vector<std::size_t> widths, std::vector<double> mu_w, double mu_x, double mu_m,
                        double spread) {
  AssumptionConfig c;
  c.widths = std::move(widths);
  c.weight_means = std::move(mu_w);
  c.feature_mean = mu_x;
  c.mask_mean = mu_m;
  c.spread = spread;
  return c;
}

}  // namespace

std::vector<TheoremReport> run_verify_suite(const VerifySettings& s) {
  if (s.trials < 2 || s.t3_trials < 2) throw std::invalid_argument("verify needs at least 2 trials");
  std::vector<TheoremReport> rows;
  if (s.t1) {
    rows.push_back(check_theorem1(linear({3, 1}, {0.5}, 2.0, 0.5, 0.1), s.trials, s.seed));
    rows.push_back(check_theorem1(linear({4, 3, 1}, {0.5, 0.25}, 1.0, 0.5, 0.1), s.trials, s.seed + 1));
    // Degenerate draws: the estimate must equal the product to rounding.
    auto exact = linear({4, 3, 1}, {0.5, 0.25}, 1.0, 1.0, 0.0);
    auto r = check_theorem1(exact, s.trials, s.seed + 2);
    r.label += " exact";
    r.tolerance = "relative 1e-10";
    r.pass = std::abs(r.estimate - r.predicted) <= 1e-10 * std::abs(r.predicted);
    rows.push_back(r);
  }
  if (s.t2) {
    auto c = linear({3, 2, 1}, {0.4, 0.3}, 1.5, 0.6, 0.2);
    c.activation = Activation::affine(2.0, 0.5);
    c.use_bias = true;
    c.bias_means = {0.2, -0.1};
    rows.push_back(check_theorem2(c, s.trials, s.seed + 3));
    auto d = linear({2, 1}, {0.5}, 1.0, 0.5, 0.1);
    d.activation = Activation::affine(1.0, 1.0);
    d.use_bias = true;
    d.bias_means = {0.0};
    rows.push_back(check_theorem2(d, s.trials, s.seed + 4));
  }
  if (s.t3) {
    std::uint64_t k = 0;
    for (auto tag : {ActivationTag::relu, ActivationTag::leaky_relu, ActivationTag::elu, ActivationTag::softplus})
      for (const auto& c : random_convex_configs(tag, s.t3_configs, s.seed + 5))
        rows.push_back(check_theorem3(c, s.t3_trials, s.seed + 100 + k++));
  }
  if (s.t4) {
    auto base = linear({3, 1}, {0.5}, 2.0, 0.5, 0.1);
    base.activation = Activation::affine(1.5, 0.25);
    base.use_bias = true;
    base.bias_means = {0.1};
    auto main = check_theorem4_flatness(base, s.t4_grid, s.trials, s.seed + 6, s.t4_sn);
    auto main_rows = main.rows(base.hash());
    for (auto& r : main_rows) r.label = s.t4_sn.describe() + " " + r.label;
    rows.insert(rows.end(), main_rows.begin(), main_rows.end());
    if (s.t4_negative_control) {
      auto control = check_theorem4_flatness(base, s.t4_grid, s.trials, s.seed + 6, SnSetting::off());
      for (auto r : control.rows(base.hash())) {
        r.label = "negative_control " + r.label;
        r.pass = !control.flat;
        r.tolerance = "passes when not flat";
        rows.push_back(r);
      }
    }
  }
  return rows;
}

void write_theorem_csv(const std::string& path, const std::vector<TheoremReport>& rows) {
  CsvWriter csv(path, {"theorem_id", "config_hash", "label", "predicted", "estimate", "std_error", "trials", "pass"});
  for (const auto& r : rows) {
    std::string label = r.label;
    for (auto& ch : label)
      if (ch == ',') ch = ';';
    csv << to_string(r.id) << static_cast<unsigned long long>(r.config_hash) << label << r.predicted << r.estimate
        << r.std_error << r.trials << (r.pass ? 1 : 0);
    csv.end_row();
  }
  csv.close();
}

}  // namespace sparsenorm::theory
