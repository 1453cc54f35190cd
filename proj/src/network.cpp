#include "sparsenorm/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sparsenorm/random.hpp"

namespace sparsenorm {

void NetworkSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t w : widths)
    if (w == 0) throw std::invalid_argument("layer width must be >= 1");
  if (activations.size() != layers() || use_bias.size() != layers())
    throw std::invalid_argument("activations/use_bias must have one entry per layer");
}

NetworkSpec NetworkSpec::uniform(std::vector<std::size_t> widths, Activation activation) {
  NetworkSpec spec;
  std::size_t layers = widths.size() < 2 ? 0 : widths.size() - 1;
  spec.widths = std::move(widths);
  spec.activations.assign(layers, activation);
  spec.use_bias.assign(layers, true);
  return spec;
}

Eigen::MatrixXd Network::effective_weight(std::size_t layer) const {
  if (connectivity.empty()) return weights[layer];
  return weights[layer].cwiseProduct(connectivity[layer]);
}

void Network::validate() const {
  spec.validate();
  std::size_t L = spec.layers();
  if (weights.size() != L || biases.size() != L) throw std::invalid_argument("parameter count does not match spec");
  if (!connectivity.empty() && connectivity.size() != L)
    throw std::invalid_argument("connectivity must cover every layer");
  for (std::size_t i = 0; i < L; ++i) {
    auto rows = static_cast<Eigen::Index>(spec.widths[i + 1]);
    auto cols = static_cast<Eigen::Index>(spec.widths[i]);
    if (weights[i].rows() != rows || weights[i].cols() != cols || biases[i].size() != rows)
      throw std::invalid_argument("layer " + std::to_string(i + 1) + " shape does not match spec");
    if (!weights[i].allFinite() || !biases[i].allFinite())
      throw std::invalid_argument("layer " + std::to_string(i + 1) + " has non-finite parameters");
    if (!connectivity.empty() && (connectivity[i].rows() != rows || connectivity[i].cols() != cols))
      throw std::invalid_argument("connectivity shape mismatch at layer " + std::to_string(i + 1));
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
  return n;
}

Network build_network(const NetworkSpec& spec, const Init& init, std::uint64_t seed) {
  spec.validate();
  std::size_t L = spec.layers();
  if (init.kind == Init::Kind::constant_mean) {
    if (init.means.size() != L) throw std::invalid_argument("constant_mean needs one mean per layer");
    for (double m : init.means)
      if (!std::isfinite(m)) throw std::invalid_argument("constant_mean means must be finite");
    if (!(init.spread >= 0.0) || !std::isfinite(init.spread))
      throw std::invalid_argument("spread must be finite and >= 0");
  }

  Network net;
  net.spec = spec;
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < L; ++i) {
    double fan_in = static_cast<double>(spec.widths[i]);
    double fan_out = static_cast<double>(spec.widths[i + 1]);
    Eigen::MatrixXd w(static_cast<Eigen::Index>(spec.widths[i + 1]), static_cast<Eigen::Index>(spec.widths[i]));
    switch (init.kind) {
      case Init::Kind::xavier: {
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
          for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
        break;
      }
      case Init::Kind::kaiming: {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (Eigen::Index c = 0; c < w.cols(); ++c)
          for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
        break;
      }
      case Init::Kind::constant_mean: {
        if (init.spread == 0.0) {
          w.setConstant(init.means[i]);
        } else {
          std::normal_distribution<double> dist(init.means[i], init.spread);
          for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
        }
        break;
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.widths[i + 1])));
  }
  return net;
}

ForwardTrace forward_batch(const Network& net, const Eigen::MatrixXd& inputs, const HiddenScaler& scaler) {
  std::size_t L = net.layers();
  if (inputs.rows() != static_cast<Eigen::Index>(net.spec.input_dim()))
    throw std::invalid_argument("input dimension " + std::to_string(inputs.rows()) + " does not match n_0 = " +
                                std::to_string(net.spec.input_dim()));
  if (!inputs.allFinite()) throw std::invalid_argument("input must be finite");

  ForwardTrace trace;
  trace.input = inputs;
  trace.pre.reserve(L);
  trace.out.reserve(L);
  trace.scale.resize(L);
  const Eigen::MatrixXd* prev = &trace.input;
  for (std::size_t i = 0; i < L; ++i) {
    Eigen::MatrixXd z = net.has_connectivity() ? Eigen::MatrixXd(net.effective_weight(i) * *prev)
                                               : Eigen::MatrixXd(net.weights[i] * *prev);
    if (net.spec.use_bias[i]) z.colwise() += net.biases[i];
    Eigen::MatrixXd h = z;
    net.spec.activations[i].apply(h);
    if (scaler && i + 1 < L) {
      Eigen::MatrixXd s = scaler(i, h);
      if (s.size() != 0) {
        if (s.rows() != h.rows() || s.cols() != h.cols()) throw std::invalid_argument("hidden scale shape mismatch");
        h.array() *= s.array();
        trace.scale[i] = std::move(s);
      }
    }
    trace.pre.push_back(std::move(z));
    trace.out.push_back(std::move(h));
    prev = &trace.out.back();
  }
  return trace;
}

Eigen::MatrixXd predict(const Network& net, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != static_cast<Eigen::Index>(net.spec.input_dim()))
    throw std::invalid_argument("input dimension does not match n_0");
  Eigen::MatrixXd h = inputs;
  for (std::size_t i = 0; i < net.layers(); ++i) {
    Eigen::MatrixXd z = net.has_connectivity() ? Eigen::MatrixXd(net.effective_weight(i) * h)
                                               : Eigen::MatrixXd(net.weights[i] * h);
    if (net.spec.use_bias[i]) z.colwise() += net.biases[i];
    net.spec.activations[i].apply(z);
    h = std::move(z);
  }
  return h;
}

std::vector<Eigen::VectorXd> forward(const Network& net, const Eigen::VectorXd& input) {
  ForwardTrace trace = forward_batch(net, input);
  std::vector<Eigen::VectorXd> result;
  result.reserve(trace.out.size());
  for (auto& h : trace.out) result.emplace_back(h.col(0));
  return result;
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (std::size_t i = 0; i < net.layers(); ++i) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[i].rows(), net.weights[i].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.biases[i].size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Eigen::MatrixXd& output_grad) {
  std::size_t L = net.layers();
  const Eigen::MatrixXd& out = trace.output();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols())
    throw std::invalid_argument("output gradient shape does not match the network output");

  Gradients g;
  g.weights.resize(L);
  g.biases.resize(L);
  // delta holds dLoss/dh^i on entry to each iteration.
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = L; k-- > 0;) {
    if (trace.scale[k].size() != 0) delta.array() *= trace.scale[k].array();
    const Activation& act = net.spec.activations[k];
    if (act.is_affine()) {
      delta *= act.scale();
    } else {
      delta.array() *= act.derivative(trace.pre[k]).array();
    }
    const Eigen::MatrixXd& prev = k == 0 ? trace.input : trace.out[k - 1];
    g.weights[k].noalias() = delta * prev.transpose();
    if (net.has_connectivity()) g.weights[k].array() *= net.connectivity[k].array();
    if (net.spec.use_bias[k])
      g.biases[k] = delta.rowwise().sum();
    else
      g.biases[k] = Eigen::VectorXd::Zero(net.biases[k].size());
    if (k > 0) {
      Eigen::MatrixXd next = net.has_connectivity() ? Eigen::MatrixXd(net.effective_weight(k).transpose() * delta)
                                                    : Eigen::MatrixXd(net.weights[k].transpose() * delta);
      delta = std::move(next);
    }
  }
  return g;
}

Gradients backward(const Network& net, const Eigen::VectorXd& input, const Eigen::VectorXd& output_grad) {
  ForwardTrace trace = forward_batch(net, input);
  return backward(net, trace, output_grad);
}

}  // namespace sparsenorm
