#include "sparsenorm/training.hpp"

#include <cmath>
#include <stdexcept>

namespace sparsenorm {

void TrainConfig::validate() const {
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("adam betas must be in [0, 1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (batch_size && *batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
}

AdamState AdamState::for_network(const Network& net) {
  AdamState s;
  for (std::size_t i = 0; i < net.layers(); ++i) {
    s.m_weights.push_back(Eigen::MatrixXd::Zero(net.weights[i].rows(), net.weights[i].cols()));
    s.v_weights.push_back(Eigen::MatrixXd::Zero(net.weights[i].rows(), net.weights[i].cols()));
    s.m_biases.push_back(Eigen::VectorXd::Zero(net.biases[i].size()));
    s.v_biases.push_back(Eigen::VectorXd::Zero(net.biases[i].size()));
  }
  return s;
}

namespace {

template <typename Param>
void adam_update(Param& p, const Param& g, Param& m, Param& v, double b1, double b2, double lr_t, double eps) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
  p.array() -= lr_t * m.array() / (v.array().sqrt() + eps);
}

}  // namespace

void adam_step(Network& net, const Gradients& grads, AdamState& state, const TrainConfig& cfg) {
  if (state.m_weights.size() != net.layers()) state = AdamState::for_network(net);
  ++state.step;
  double t = static_cast<double>(state.step);
  double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
  double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
  // Bias correction folded into the step size; epsilon scaled to match the
  // uncorrected form eps / sqrt(bc2).
  double lr_t = cfg.learning_rate * std::sqrt(bc2) / bc1;
  double eps_t = cfg.adam_epsilon * std::sqrt(bc2);
  for (std::size_t i = 0; i < net.layers(); ++i) {
    if (cfg.weight_decay > 0.0) net.weights[i] *= 1.0 - cfg.learning_rate * cfg.weight_decay;
    adam_update(net.weights[i], grads.weights[i], state.m_weights[i], state.v_weights[i], cfg.adam_beta1,
                cfg.adam_beta2, lr_t, eps_t);
    if (net.spec.use_bias[i])
      adam_update(net.biases[i], grads.biases[i], state.m_biases[i], state.v_biases[i], cfg.adam_beta1,
                  cfg.adam_beta2, lr_t, eps_t);
  }
}

double masked_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target, const Eigen::VectorXd& mask) {
  if (pred.size() != target.size() || pred.size() != mask.size())
    throw std::invalid_argument("masked_mse: length mismatch");
  double count = mask.sum();
  if (count == 0.0) return 0.0;
  return ((pred - target).array().square() * mask.array()).sum() / count;
}

bool EarlyStopping::update(double score) {
  if (score < best_) {
    best_ = score;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

}  // namespace sparsenorm
