#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsenorm/datasets.hpp"
#include "sparsenorm/imputation.hpp"
#include "sparsenorm/network.hpp"
#include "sparsenorm/training.hpp"

namespace sparsenorm {

// ---------------------------------------------------------------- AutoRec

struct AutoRecConfig {
  std::size_t hidden = 500;
  double l2 = 0.0;  // coupled penalty (l2 / 2) * sum ||W||^2 on top of the mean masked MSE
  TrainConfig train{1e-3, 5.0, std::nullopt, 1500, 60, 0};  // full batch, decoupled decay
};

struct AutoRecModel {
  Network net;  // (d, H, d): sigmoid encoder, identity decoder
  ImputationStrategy strategy = ImputationStrategy::zero();
  Encoding encoding = Encoding::user_vector;
  RatingSplit split{};  // how the training ratings were carved out
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_metric = 0.0;
  double valid_metric = 0.0;
};

struct AutoRecFit {
  AutoRecModel model;
  std::vector<EpochRecord> history;  // RMSE per epoch
  std::size_t best_epoch = 0;
};

struct AutoRecObjective {
  double loss = 0.0;  // masked MSE + penalty
  Gradients grads;
};

// Objective and gradients for one batch of strategy-applied inputs (d x B),
// rating targets and target masks.
AutoRecObjective autorec_objective(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                   const Eigen::MatrixXd& mask, double l2);

// `valid` holds ratings withheld from `train` on the same instance axis. The
// parameters from the epoch with the lowest validation RMSE are kept.
// `on_epoch`, when set, sees every epoch record as it is produced.
AutoRecFit train_autorec(const Dataset& train, const Dataset& valid, const ImputationStrategy& strategy,
                         Encoding encoding, const AutoRecConfig& cfg,
                         const std::function<void(const EpochRecord&)>& on_epoch = nullptr);

// Predictions for every instance of `inputs` (d x N).
Eigen::MatrixXd autorec_predict(const AutoRecModel& model, const Dataset& inputs);

// RMSE over observed coordinates of `targets`, predictions clipped to [1, 5].
double clipped_rmse(const Eigen::MatrixXd& predictions, const Dataset& targets);
double eval_rmse(const AutoRecModel& model, const Dataset& train_inputs, const std::vector<RatingTriple>& test);

// ------------------------------------------------------------------- MADE

enum class SnMode { off, input, all };
SnMode parse_sn_mode(const std::string& name);
std::string to_string(SnMode m);

struct MadeMasks {
  std::vector<std::size_t> order;  // order[k]: position of input k in the factorization
  std::vector<Eigen::MatrixXd> masks;  // binary, n_i x n_{i-1}
};

// Natural ordering when `ordering_seed` is empty.
MadeMasks build_made_masks(const std::vector<std::size_t>& widths, std::optional<std::uint64_t> ordering_seed,
                           std::uint64_t connectivity_seed);

// (1'M1 / n_i) * M ./ rowsum(M); all-zero rows stay zero.
Eigen::MatrixXd normalize_mask(const Eigen::MatrixXd& M, std::size_t n_i);

struct MadeModel {
  Network net;  // identity output layer; outputs are logits
  MadeMasks masks;
  SnMode sn_mode = SnMode::off;
  double K = 0.0;  // input SN scale, used when sn_mode != off
};

struct MadeConfig {
  std::vector<std::size_t> hidden{500};
  std::optional<std::uint64_t> ordering_seed;
  std::uint64_t connectivity_seed = 0;
  TrainConfig train{0.005, 0.0, std::size_t{100}, 20, 0, 0};
};

// Untrained model: hidden layers Xavier-initialised, output layer all zero.
MadeModel make_made(std::size_t d, SnMode sn_mode, double K, const MadeConfig& cfg);

// Network input for binary images (d x N), SN applied per the mode.
Eigen::MatrixXd made_inputs(const MadeModel& model, const Dataset& data);

struct MadeFit {
  MadeModel model;
  std::vector<EpochRecord> history;  // train and validation NLL; epoch 0 is before training
};

MadeFit train_made(const Dataset& train, const Dataset& valid, SnMode sn_mode, const MadeConfig& cfg,
                   const std::function<void(const EpochRecord&)>& on_epoch = nullptr);

inline constexpr double kProbabilityClamp = 1e-6;

// Mean over instances of -sum_j [x log p + (1-x) log(1-p)], p clamped to [eps, 1-eps].
double nll_from_probabilities(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& x,
                              double eps = kProbabilityClamp);
double eval_nll(const MadeModel& model, const Dataset& test);

// Max |row sum - average row sum| over nonzero rows of every normalised mask.
double made_mask_invariant_error(const MadeModel& model);

// --------------------------------------------------------------- checkpoints

// SNNET1 followed by AUTOREC1 (encoding, split) and IMPUTE1 sections.
void write_autorec(std::ostream& out, const AutoRecModel& model);
AutoRecModel read_autorec(std::istream& in);
// SNNET1 followed by MADE1: d, sn_mode, K, ordering, binary masks as bytes.
void write_made(std::ostream& out, const MadeModel& model);
MadeModel read_made(std::istream& in);

}  // namespace sparsenorm
