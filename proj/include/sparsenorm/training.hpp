#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "sparsenorm/network.hpp"

namespace sparsenorm {

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;  // decoupled, weights only
  std::optional<std::size_t> batch_size;  // nullopt: full batch
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 0;  // 0 disables early stopping
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  std::uint64_t step = 0;

  static AdamState for_network(const Network& net);
};

// One Adam update. Weight decay is decoupled (w -= lr * lambda * w) and
// skipped for biases.
void adam_step(Network& net, const Gradients& grads, AdamState& state, const TrainConfig& cfg);

// Mean squared error over coordinates with mask == 1; 0 for an empty mask.
double masked_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target, const Eigen::VectorXd& mask);

// Tracks the best validation score seen so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `score` improved on the best so far.
  bool update(double score);
  bool should_stop() const { return patience_ > 0 && since_best_ >= patience_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace sparsenorm
