#include "sparsenorm/vsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sparsenorm/csv.hpp"

namespace sparsenorm {

double default_scalarize(const Eigen::VectorXd& output, const MaskedInstance& original) {
  if (output.size() == original.size()) {
    const double n = original.observed_count();
    if (n == 0.0) return output.mean();
    return output.dot(original.mask()) / n;
  }
  if (output.size() == 1) return output(0);
  return output.mean();
}

std::vector<std::size_t> default_levels(std::size_t observed, std::size_t count) {
  if (observed == 0) throw std::invalid_argument("instance has no observed coordinates");
  if (count == 0) throw std::invalid_argument("level count must be positive");
  std::vector<std::size_t> levels;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    auto k = static_cast<std::size_t>(std::llround(1.0 + t * static_cast<double>(observed - 1)));
    if (levels.empty() || levels.back() != k) levels.push_back(k);
  }
  return levels;
}

SweepReport sparsity_sweep(const SweepModel& model, const MaskedInstance& inst, const std::string& instance_id,
                           const SweepConfig& config) {
  if (!model.forward) throw std::invalid_argument("sweep model has no forward function");
  if (config.samples_per_level < 2) throw std::invalid_argument("samples_per_level must be at least 2");
  const auto observed = inst.observed_indices();
  const auto levels = config.levels.empty() ? default_levels(observed.size()) : config.levels;
  for (auto k : levels)
    if (k > observed.size())
      throw std::invalid_argument("level " + std::to_string(k) + " exceeds observed count " +
                                  std::to_string(observed.size()));
  const Scalarizer scalarize = config.scalarizer ? config.scalarizer : Scalarizer(default_scalarize);

  SweepReport report{instance_id, model.model_id, model.strategy.name(), {}};
  const auto S = static_cast<Eigen::Index>(config.samples_per_level);
  const Eigen::Index d = inst.size();
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const std::size_t k = levels[li];
    auto rng = make_rng(config.seed, li);
    Eigen::MatrixXd inputs(d, S);
    auto pool = observed;
    for (Eigen::Index s = 0; s < S; ++s) {
      // partial Fisher-Yates: the first k entries become a uniform subset
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
      for (std::size_t i = 0; i < k; ++i) m(pool[i]) = 1.0;
      inputs.col(s) = model.strategy.apply(MaskedInstance(inst.values(), std::move(m)));
    }
    const Eigen::MatrixXd out = model.forward(inputs);
    if (out.cols() != S) throw std::logic_error("sweep forward returned wrong batch size");

    SweepLevel level;
    level.level = k;
    level.samples.resize(config.samples_per_level);
    for (Eigen::Index s = 0; s < S; ++s) level.samples[static_cast<std::size_t>(s)] = scalarize(out.col(s), inst);
    level.mean = std::accumulate(level.samples.begin(), level.samples.end(), 0.0) / static_cast<double>(S);
    double ss = 0.0;
    for (double v : level.samples) ss += (v - level.mean) * (v - level.mean);
    level.std = std::sqrt(ss / static_cast<double>(S - 1));
    report.levels.push_back(std::move(level));
  }
  return report;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double r = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.r = syy > 0.0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
  return f;
}

}  // namespace

VspMetrics vsp_metrics(const std::vector<double>& levels, const std::vector<double>& means,
                       const std::vector<double>& stds) {
  if (levels.size() != means.size() || levels.size() != stds.size())
    throw std::invalid_argument("level, mean and std columns differ in length");
  std::vector<double> distinct = levels;
  std::sort(distinct.begin(), distinct.end());
  if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
    throw std::invalid_argument("vsp_metrics needs at least 2 distinct levels");
  const auto f = fit_line(levels, means);
  VspMetrics m;
  m.slope = f.slope;
  m.pearson_r = f.r;
  const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
  m.range = *hi - *lo;
  m.monotone_std = fit_line(levels, stds).slope < 0.0;
  return m;
}

VspMetrics vsp_metrics(const SweepReport& report) {
  std::vector<double> x, y, s;
  for (const auto& l : report.levels) {
    x.push_back(static_cast<double>(l.level));
    y.push_back(l.mean);
    s.push_back(l.std);
  }
  return vsp_metrics(x, y, s);
}

void write_sweep_samples(const std::string& path, const std::vector<SweepReport>& reports) {
  CsvWriter csv(path, {"instance_id", "strategy", "level", "sample_index", "prediction"});
  for (const auto& r : reports)
    for (const auto& l : r.levels)
      for (std::size_t s = 0; s < l.samples.size(); ++s) {
        csv << r.instance_id << r.strategy << l.level << s << l.samples[s];
        csv.end_row();
      }
  csv.close();
}

void write_sweep_summary(const std::string& path, const SweepReport& report) {
  CsvWriter csv(path, {"level", "mean", "std"});
  for (const auto& l : report.levels) {
    csv << l.level << l.mean << l.std;
    csv.end_row();
  }
  csv.close();
}

}  // namespace sparsenorm
