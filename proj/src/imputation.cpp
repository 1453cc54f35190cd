#include "sparsenorm/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "sparsenorm/checkpoint.hpp"

namespace sparsenorm {

MaskedInstance::MaskedInstance(Eigen::VectorXd values, Eigen::VectorXd mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (values_.size() != mask_.size()) throw std::invalid_argument("values and mask lengths differ");
  for (Eigen::Index j = 0; j < mask_.size(); ++j) {
    if (mask_[j] != 0.0 && mask_[j] != 1.0) throw std::invalid_argument("mask must be binary");
    if (mask_[j] == 0.0) values_[j] = 0.0;
  }
}

MaskedInstance MaskedInstance::fully_observed(Eigen::VectorXd values) {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(values.size());
  return MaskedInstance(std::move(values), std::move(mask));
}

std::vector<Eigen::Index> MaskedInstance::observed_indices() const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < mask_.size(); ++j)
    if (mask_[j] != 0.0) idx.push_back(j);
  return idx;
}

Dataset::Dataset(std::size_t feature_dim, std::vector<MaskedInstance> instances) : dim_(feature_dim) {
  instances_.reserve(instances.size());
  for (auto& inst : instances) add(std::move(inst));
}

void Dataset::check(const MaskedInstance& inst) const {
  if (static_cast<std::size_t>(inst.size()) != dim_)
    throw std::invalid_argument("instance length " + std::to_string(inst.size()) + " does not match dataset dimension " +
                                std::to_string(dim_));
}

void Dataset::add(MaskedInstance inst) {
  check(inst);
  mask_total_ += inst.observed_count();
  instances_.push_back(std::move(inst));
}

void Dataset::set(std::size_t index, MaskedInstance inst) {
  check(inst);
  mask_total_ += inst.observed_count() - instances_.at(index).observed_count();
  instances_[index] = std::move(inst);
}

Eigen::MatrixXd Dataset::values_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) m.col(static_cast<Eigen::Index>(i)) = instances_[i].values();
  return m;
}

Eigen::MatrixXd Dataset::mask_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) m.col(static_cast<Eigen::Index>(i)) = instances_[i].mask();
  return m;
}

double compute_K(const Dataset& train) {
  if (train.empty()) throw std::invalid_argument("compute_K: empty dataset");
  return train.K();
}

Eigen::VectorXd sparsity_normalize(const MaskedInstance& inst, double K) {
  if (!(K > 0.0)) throw std::invalid_argument("sparsity_normalize: K must be > 0");
  return inst.values() * (K / std::max(inst.observed_count(), 1.0));
}

Eigen::MatrixXd sparsity_normalize(const Eigen::MatrixXd& values, const Eigen::MatrixXd& mask, double K) {
  if (!(K > 0.0)) throw std::invalid_argument("sparsity_normalize: K must be > 0");
  if (values.rows() != mask.rows() || values.cols() != mask.cols())
    throw std::invalid_argument("sparsity_normalize: values/mask shape mismatch");
  Eigen::RowVectorXd factor = (K / mask.colwise().sum().array().max(1.0)).matrix();
  return values * factor.asDiagonal();
}

ImputationStrategy ImputationStrategy::zero() { return ImputationStrategy(Kind::zero, 0.0, std::nullopt); }

ImputationStrategy ImputationStrategy::zero_sn(double K) {
  if (!(K > 0.0) || !std::isfinite(K)) throw std::invalid_argument("zero_sn requires K > 0");
  return ImputationStrategy(Kind::zero_sn, K, std::nullopt);
}

namespace {

std::vector<std::vector<double>> observed_columns(const Dataset& train) {
  std::vector<std::vector<double>> cols(train.feature_dim());
  for (const auto& inst : train.instances())
    for (Eigen::Index j = 0; j < inst.size(); ++j)
      if (inst.mask()[j] != 0.0) cols[static_cast<std::size_t>(j)].push_back(inst.values()[j]);
  return cols;
}

double median_of(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

ImputationStrategy ImputationStrategy::fit_mean(const Dataset& train) {
  auto cols = observed_columns(train);
  Eigen::VectorXd stats(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    double sum = 0.0;
    for (double v : cols[j]) sum += v;
    stats[static_cast<Eigen::Index>(j)] = cols[j].empty() ? 0.0 : sum / static_cast<double>(cols[j].size());
  }
  return ImputationStrategy(Kind::mean, 0.0, std::move(stats));
}

ImputationStrategy ImputationStrategy::fit_median(const Dataset& train) {
  auto cols = observed_columns(train);
  Eigen::VectorXd stats(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) stats[static_cast<Eigen::Index>(j)] = median_of(cols[j]);
  return ImputationStrategy(Kind::median, 0.0, std::move(stats));
}

ImputationStrategy ImputationStrategy::unfitted(Kind kind) { return ImputationStrategy(kind, 0.0, std::nullopt); }

std::string ImputationStrategy::name() const {
  switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::zero_sn: return "zero_sn";
    case Kind::mean: return "mean";
    case Kind::median: return "median";
  }
  return "zero";
}

ImputationStrategy::Kind ImputationStrategy::parse_kind(const std::string& name) {
  if (name == "zero") return Kind::zero;
  if (name == "zero_sn") return Kind::zero_sn;
  if (name == "mean") return Kind::mean;
  if (name == "median") return Kind::median;
  throw std::invalid_argument("unknown imputation strategy '" + name + "'");
}

Eigen::VectorXd ImputationStrategy::apply(const MaskedInstance& inst) const {
  switch (kind_) {
    case Kind::zero:
      return inst.values();
    case Kind::zero_sn:
      return sparsity_normalize(inst, K_);
    case Kind::mean:
    case Kind::median: {
      if (!stats_) throw std::logic_error(name() + " imputation used before fitting");
      if (stats_->size() != inst.size()) throw std::invalid_argument("instance dimension does not match fitted statistics");
      Eigen::VectorXd out = inst.values();
      for (Eigen::Index j = 0; j < out.size(); ++j)
        if (inst.mask()[j] == 0.0) out[j] = (*stats_)[j];
      return out;
    }
  }
  return inst.values();
}

Eigen::MatrixXd ImputationStrategy::apply(const Dataset& data) const {
  Eigen::MatrixXd values = data.values_matrix();
  switch (kind_) {
    case Kind::zero:
      return values;
    case Kind::zero_sn:
      return sparsity_normalize(values, data.mask_matrix(), K_);
    case Kind::mean:
    case Kind::median:
      for (std::size_t i = 0; i < data.size(); ++i) values.col(static_cast<Eigen::Index>(i)) = apply(data[i]);
      return values;
  }
  return values;
}

void ImputationStrategy::write(std::ostream& out) const {
  out << "IMPUTE1\n" << name();
  if (kind_ == Kind::zero_sn) {
    out << '\n';
    write_f64(out, K_);
    out << '\n';
  } else if (kind_ == Kind::mean || kind_ == Kind::median) {
    if (!stats_) throw std::logic_error("cannot serialize an unfitted strategy");
    out << ' ' << stats_->size() << '\n';
    write_f64s(out, *stats_);
    out << '\n';
  } else {
    out << '\n';
  }
}

ImputationStrategy ImputationStrategy::read(std::istream& in) {
  if (expect_line(in, "IMPUTE1 tag") != "IMPUTE1") throw std::runtime_error("expected IMPUTE1 section");
  std::istringstream head(expect_line(in, "IMPUTE1 header"));
  std::string kind_name;
  head >> kind_name;
  Kind kind = parse_kind(kind_name);
  if (kind == Kind::zero) return zero();
  if (kind == Kind::zero_sn) {
    double K = read_f64(in);
    expect_line(in, "IMPUTE1 terminator");
    return zero_sn(K);
  }
  Eigen::Index n = 0;
  if (!(head >> n) || n < 0) throw std::runtime_error("bad IMPUTE1 statistics length");
  Eigen::VectorXd stats = read_f64s(in, n);
  expect_line(in, "IMPUTE1 terminator");
  return ImputationStrategy(kind, 0.0, std::move(stats));
}

namespace {

void check_rate(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("drop rate must be in [0, 1)");
}

Eigen::MatrixXd keep_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Eigen::MatrixXd keep(rows, cols);
  if (p == 0.0) {
    keep.setOnes();
    return keep;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) keep(r, c) = u(rng) < 1.0 - p ? 1.0 : 0.0;
  return keep;
}

}  // namespace

DropoutResult dropout_forward(const Eigen::VectorXd& h, double p, DropoutMode mode, Rng& rng) {
  check_rate(p);
  if (mode == DropoutMode::eval || p == 0.0) return {h, Eigen::VectorXd::Ones(h.size())};
  Eigen::VectorXd mask = keep_mask(h.size(), 1, p, rng);
  return {h.cwiseProduct(mask) / (1.0 - p), mask};
}

Eigen::VectorXd dropout_sn_apply(const Eigen::VectorXd& h, const Eigen::VectorXd& mask, std::optional<double> K) {
  if (h.size() != mask.size()) throw std::invalid_argument("dropout_sn_apply: length mismatch");
  double k = K.value_or(static_cast<double>(h.size()));
  return h.cwiseProduct(mask) * (k / std::max(mask.sum(), 1.0));
}

Eigen::VectorXd dropout_sn_forward(const Eigen::VectorXd& h, double p, Rng& rng, std::optional<double> K) {
  check_rate(p);
  Eigen::VectorXd mask = keep_mask(h.size(), 1, p, rng);
  return dropout_sn_apply(h, mask, K);
}

Eigen::MatrixXd dropout_scale(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  check_rate(p);
  return keep_mask(rows, cols, p, rng) / (1.0 - p);
}

Eigen::MatrixXd dropout_sn_scale(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng, std::optional<double> K) {
  check_rate(p);
  Eigen::MatrixXd keep = keep_mask(rows, cols, p, rng);
  double k = K.value_or(static_cast<double>(rows));
  Eigen::RowVectorXd factor = (k / keep.colwise().sum().array().max(1.0)).matrix();
  return keep * factor.asDiagonal();
}

double vsp_degree(std::size_t n, double p) {
  check_rate(p);
  if (n == 0) throw std::invalid_argument("vsp_degree: n must be >= 1");
  return std::sqrt(p / (static_cast<double>(n) * (1.0 - p)));
}

}  // namespace sparsenorm
