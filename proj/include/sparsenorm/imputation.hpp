#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsenorm/random.hpp"

namespace sparsenorm {

/// A feature vector stored in zero-imputed form together with its binary
/// observation mask. Missing coordinates always hold exactly 0.
class MaskedInstance {
 public:
  MaskedInstance() = default;
  // Zeroes values under mask == 0. Throws on length mismatch or a non-binary mask.
  MaskedInstance(Eigen::VectorXd values, Eigen::VectorXd mask);

  static MaskedInstance fully_observed(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::VectorXd& mask() const { return mask_; }
  Eigen::Index size() const { return values_.size(); }
  double observed_count() const { return mask_.sum(); }

  // Indices of observed coordinates in increasing order.
  std::vector<Eigen::Index> observed_indices() const;

 private:
  Eigen::VectorXd values_;
  Eigen::VectorXd mask_;
};

/// Instances of a common dimension, with K = mean ||m||_1 kept current.
class Dataset {
 public:
  explicit Dataset(std::size_t feature_dim = 0) : dim_(feature_dim) {}
  Dataset(std::size_t feature_dim, std::vector<MaskedInstance> instances);

  void add(MaskedInstance inst);
  void set(std::size_t index, MaskedInstance inst);

  std::size_t feature_dim() const { return dim_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const MaskedInstance& operator[](std::size_t i) const { return instances_[i]; }
  const std::vector<MaskedInstance>& instances() const { return instances_; }

  // Mean of ||m||_1 over all instances (0 for an empty dataset).
  double K() const { return empty() ? 0.0 : mask_total_ / static_cast<double>(size()); }
  double observed_total() const { return mask_total_; }

  // d x N matrices, one column per instance.
  Eigen::MatrixXd values_matrix() const;
  Eigen::MatrixXd mask_matrix() const;

 private:
  void check(const MaskedInstance& inst) const;

  std::size_t dim_;
  std::vector<MaskedInstance> instances_;
  double mask_total_ = 0.0;
};

// Training-set average of ||m||_1. Throws std::invalid_argument when empty.
double compute_K(const Dataset& train);

// K * values / max(||m||_1, 1).
Eigen::VectorXd sparsity_normalize(const MaskedInstance& inst, double K);
// Column-wise form over a values/mask matrix pair.
Eigen::MatrixXd sparsity_normalize(const Eigen::MatrixXd& values, const Eigen::MatrixXd& mask, double K);

class ImputationStrategy {
 public:
  enum class Kind { zero, zero_sn, mean, median };

  static ImputationStrategy zero();
  static ImputationStrategy zero_sn(double K);
  // Per-feature statistics from observed entries only; features without
  // observations fall back to 0.
  static ImputationStrategy fit_mean(const Dataset& train);
  static ImputationStrategy fit_median(const Dataset& train);
  // A mean/median strategy without statistics; apply() throws until fitted.
  static ImputationStrategy unfitted(Kind kind);

  Kind kind() const { return kind_; }
  double K() const { return K_; }
  const std::optional<Eigen::VectorXd>& statistics() const { return stats_; }
  std::string name() const;

  Eigen::VectorXd apply(const MaskedInstance& inst) const;
  // d x N network input for a whole dataset.
  Eigen::MatrixXd apply(const Dataset& data) const;

  // "IMPUTE1" checkpoint section.
  void write(std::ostream& out) const;
  static ImputationStrategy read(std::istream& in);

  static Kind parse_kind(const std::string& name);

 private:
  ImputationStrategy(Kind kind, double K, std::optional<Eigen::VectorXd> stats)
      : kind_(kind), K_(K), stats_(std::move(stats)) {}

  Kind kind_ = Kind::zero;
  double K_ = 0.0;
  std::optional<Eigen::VectorXd> stats_;
};

enum class DropoutMode { train, eval };

struct DropoutResult {
  Eigen::VectorXd output;
  Eigen::VectorXd mask;
};

// Inverted dropout: keep with probability 1-p, scale kept units by 1/(1-p).
DropoutResult dropout_forward(const Eigen::VectorXd& h, double p, DropoutMode mode, Rng& rng);

// Dropout followed by per-instance sparsity normalization of the hidden
// layer: K * (h (.) mask) / max(||mask||_1, 1), K defaulting to n.
Eigen::VectorXd dropout_sn_forward(const Eigen::VectorXd& h, double p, Rng& rng,
                                   std::optional<double> K = std::nullopt);
Eigen::VectorXd dropout_sn_apply(const Eigen::VectorXd& h, const Eigen::VectorXd& mask,
                                 std::optional<double> K = std::nullopt);

// Per-coordinate multipliers (n x B) for a batch of hidden activations; these
// plug into forward_batch as a HiddenScaler.
Eigen::MatrixXd dropout_scale(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng);
Eigen::MatrixXd dropout_sn_scale(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng,
                                 std::optional<double> K = std::nullopt);

// Inverse signal-to-noise ratio of the active-unit count: sqrt(p / (n (1-p))).
double vsp_degree(std::size_t n, double p);

}  // namespace sparsenorm
