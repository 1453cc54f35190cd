#include "sparsenorm/activation.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sparsenorm {

namespace {

double stable_softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

}  // namespace

Activation Activation::identity() { return Activation(ActivationTag::identity, 1.0, 0.0); }

Activation Activation::affine(double scale, double shift) {
  require_finite(scale, "affine scale");
  require_finite(shift, "affine shift");
  return Activation(ActivationTag::affine, scale, shift);
}

Activation Activation::relu() { return Activation(ActivationTag::relu, 0.0, 0.0); }

Activation Activation::leaky_relu(double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw std::invalid_argument("leaky_relu slope must be in (0, 1)");
  return Activation(ActivationTag::leaky_relu, slope, 0.0);
}

Activation Activation::elu(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("elu alpha must be > 0");
  return Activation(ActivationTag::elu, alpha, 0.0);
}

Activation Activation::softplus() { return Activation(ActivationTag::softplus, 0.0, 0.0); }

Activation Activation::sigmoid() { return Activation(ActivationTag::sigmoid, 0.0, 0.0); }

bool Activation::is_convex_nondecreasing() const {
  switch (tag_) {
    case ActivationTag::identity:
    case ActivationTag::relu:
    case ActivationTag::leaky_relu:
    case ActivationTag::softplus:
      return true;
    case ActivationTag::affine:
      return a_ >= 0.0;
    case ActivationTag::elu:
      // convex only while alpha <= 1 (second derivative alpha*e^z on z<0, slope 1 on z>0).
      return a_ <= 1.0;
    case ActivationTag::sigmoid:
      return false;
  }
  return false;
}

double Activation::operator()(double z) const {
  switch (tag_) {
    case ActivationTag::identity:
    case ActivationTag::affine:
      return a_ * z + b_;
    case ActivationTag::relu:
      return z > 0.0 ? z : 0.0;
    case ActivationTag::leaky_relu:
      return z > 0.0 ? z : a_ * z;
    case ActivationTag::elu:
      return z > 0.0 ? z : a_ * std::expm1(z);
    case ActivationTag::softplus:
      return stable_softplus(z);
    case ActivationTag::sigmoid:
      return stable_sigmoid(z);
  }
  return z;
}

double Activation::derivative(double z) const {
  switch (tag_) {
    case ActivationTag::identity:
    case ActivationTag::affine:
      return a_;
    case ActivationTag::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case ActivationTag::leaky_relu:
      return z > 0.0 ? 1.0 : a_;
    case ActivationTag::elu:
      return z > 0.0 ? 1.0 : a_ * std::exp(z);
    case ActivationTag::softplus:
      return stable_sigmoid(z);
    case ActivationTag::sigmoid: {
      double s = stable_sigmoid(z);
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

void Activation::apply(Eigen::Ref<Eigen::MatrixXd> z) const {
  switch (tag_) {
    case ActivationTag::identity:
    case ActivationTag::affine:
      z.array() = a_ * z.array() + b_;
      return;
    case ActivationTag::relu:
      z = z.cwiseMax(0.0);
      return;
    default:
      z = z.unaryExpr([this](double v) { return (*this)(v); });
  }
}

Eigen::MatrixXd Activation::derivative(const Eigen::MatrixXd& z) const {
  return z.unaryExpr([this](double v) { return derivative(v); });
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Activation::to_string() const {
  switch (tag_) {
    case ActivationTag::identity: return "identity";
    case ActivationTag::affine: return "affine " + shortest(a_) + ' ' + shortest(b_);
    case ActivationTag::relu: return "relu";
    case ActivationTag::leaky_relu: return "leaky_relu " + shortest(a_);
    case ActivationTag::elu: return "elu " + shortest(a_);
    case ActivationTag::softplus: return "softplus";
    case ActivationTag::sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation Activation::parse(const std::string& text) {
  std::istringstream in(text);
  std::string name;
  in >> name;
  auto param = [&](double fallback) {
    double v = fallback;
    if (!(in >> v)) {
      if (in.eof()) return fallback;
      throw std::invalid_argument("bad activation parameter in '" + text + "'");
    }
    return v;
  };
  if (name == "identity") return identity();
  if (name == "affine") {
    double scale = param(1.0);
    double shift = param(0.0);
    return affine(scale, shift);
  }
  if (name == "relu") return relu();
  if (name == "leaky_relu") return leaky_relu(param(0.01));
  if (name == "elu") return elu(param(1.0));
  if (name == "softplus") return softplus();
  if (name == "sigmoid") return sigmoid();
  throw std::invalid_argument("unknown activation '" + text + "'");
}

}  // namespace sparsenorm
