#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sparsenorm/activation.hpp"

namespace sparsenorm {

struct NetworkSpec {
  std::vector<std::size_t> widths;  // n_0 .. n_L
  std::vector<Activation> activations;  // layers 1..L
  std::vector<bool> use_bias;  // layers 1..L

  std::size_t layers() const { return widths.empty() ? 0 : widths.size() - 1; }
  std::size_t input_dim() const { return widths.front(); }
  std::size_t output_dim() const { return widths.back(); }

  // Throws std::invalid_argument when the layer counts disagree or a width is 0.
  void validate() const;

  // Same activation on every layer, biases everywhere.
  static NetworkSpec uniform(std::vector<std::size_t> widths, Activation activation);
};

/// A dense feed-forward network h^i = sigma_i(W^i h^{i-1} + b^i).
///
/// `connectivity`, when non-empty, holds one matrix per layer that is
/// multiplied element-wise into W^i before use (MADE masks). Entries where
/// the connectivity is zero take no part in the forward pass and receive a
/// zero gradient.
struct Network {
  NetworkSpec spec;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::vector<Eigen::MatrixXd> connectivity;

  std::size_t layers() const { return spec.layers(); }
  bool has_connectivity() const { return !connectivity.empty(); }
  Eigen::MatrixXd effective_weight(std::size_t layer) const;

  // Shapes agree with `spec` and every parameter is finite.
  void validate() const;
  std::size_t parameter_count() const;
};

struct Init {
  enum class Kind { xavier, kaiming, constant_mean };

  Kind kind = Kind::xavier;
  std::vector<double> means;  // constant_mean: one mu_w per layer
  double spread = 0.0;  // constant_mean: Normal std

  static Init xavier() { return {Kind::xavier, {}, 0.0}; }
  static Init kaiming() { return {Kind::kaiming, {}, 0.0}; }
  static Init constant_mean(std::vector<double> means, double spread) {
    return {Kind::constant_mean, std::move(means), spread};
  }
};

// Weights drawn i.i.d. per layer; biases start at zero. Same seed gives a
// bit-identical network.
Network build_network(const NetworkSpec& spec, const Init& init, std::uint64_t seed);

// All layer activations h^1..h^L for a single input vector.
std::vector<Eigen::VectorXd> forward(const Network& net, const Eigen::VectorXd& input);

// Optional per-hidden-layer scaling applied after the activation:
// h^i <- a^i (.) S^i. Return an empty matrix to leave a layer untouched.
// Used for dropout; the scale is treated as a constant by backward().
using HiddenScaler = std::function<Eigen::MatrixXd(std::size_t layer, const Eigen::MatrixXd& activations)>;

// Column-major batch: every column of `inputs` is one instance.
struct ForwardTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;  // z^i
  std::vector<Eigen::MatrixXd> out;  // h^i (after any scaling)
  std::vector<Eigen::MatrixXd> scale;  // S^i or empty

  const Eigen::MatrixXd& output() const { return out.back(); }
};

ForwardTrace forward_batch(const Network& net, const Eigen::MatrixXd& inputs,
                           const HiddenScaler& scaler = nullptr);

// Output-only batch evaluation.
Eigen::MatrixXd predict(const Network& net, const Eigen::MatrixXd& inputs);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Gradients zeros_like(const Network& net);
  Gradients& operator+=(const Gradients& other);
};

// Reverse-mode gradients of a scalar loss given dLoss/dh^L for each column.
Gradients backward(const Network& net, const ForwardTrace& trace, const Eigen::MatrixXd& output_grad);

Gradients backward(const Network& net, const Eigen::VectorXd& input, const Eigen::VectorXd& output_grad);

}  // namespace sparsenorm
