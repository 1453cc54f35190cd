#pragma once

// Central finite-difference oracle for network gradients. Test-only; it uses
// nothing from backward() so it can be used to check it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "sparsenorm/network.hpp"

namespace sparsenorm::testing {

// Linear read-out of the final layer: loss = c . h^L.
inline double linear_loss(const Network& net, const Eigen::VectorXd& x, const Eigen::VectorXd& c) {
  return c.dot(forward(net, x).back());
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

inline double relative_error(double analytic, double numeric) {
  double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

inline GradCheck check_against_finite_differences(Network net, const Eigen::VectorXd& x, const Eigen::VectorXd& c,
                                                  double step = 1e-5) {
  Gradients g = backward(net, x, c);
  GradCheck result;
  auto probe = [&](double& param, double analytic) {
    double saved = param;
    param = saved + step;
    double up = linear_loss(net, x, c);
    param = saved - step;
    double down = linear_loss(net, x, c);
    param = saved;
    double numeric = (up - down) / (2.0 * step);
    result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic, numeric));
    ++result.coordinates;
  };
  for (std::size_t i = 0; i < net.layers(); ++i) {
    for (Eigen::Index r = 0; r < net.weights[i].rows(); ++r)
      for (Eigen::Index col = 0; col < net.weights[i].cols(); ++col) probe(net.weights[i](r, col), g.weights[i](r, col));
    if (net.spec.use_bias[i])
      for (Eigen::Index r = 0; r < net.biases[i].size(); ++r) probe(net.biases[i][r], g.biases[i][r]);
  }
  return result;
}

// Smallest |z| over all pre-activations; kinks (relu, leaky_relu, elu with
// alpha != 1) are only differentiable away from 0.
inline double min_abs_preactivation(const Network& net, const Eigen::VectorXd& x) {
  ForwardTrace t = forward_batch(net, x);
  double m = INFINITY;
  for (const auto& z : t.pre) m = std::min(m, z.cwiseAbs().minCoeff());
  return m;
}

}  // namespace sparsenorm::testing
