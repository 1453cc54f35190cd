#pragma once

#include <string>

#include <Eigen/Dense>

namespace sparsenorm {

enum class ActivationTag { identity, affine, relu, leaky_relu, elu, softplus, sigmoid };

/// Element-wise nonlinearity sigma applied after each affine layer.
///
/// Parameters are interpreted per tag: affine uses (scale, shift), leaky_relu
/// uses slope, elu uses alpha. Identity evaluates through the affine formula
/// with (1, 0) so the two are bit-identical.
class Activation {
 public:
  Activation() = default;

  static Activation identity();
  static Activation affine(double scale, double shift);
  static Activation relu();
  static Activation leaky_relu(double slope);
  static Activation elu(double alpha);
  static Activation softplus();
  static Activation sigmoid();

  ActivationTag tag() const { return tag_; }
  double scale() const { return a_; }
  double shift() const { return b_; }
  double slope() const { return a_; }
  double alpha() const { return a_; }

  bool is_affine() const { return tag_ == ActivationTag::identity || tag_ == ActivationTag::affine; }
  // Non-decreasing and convex on all of R.
  bool is_convex_nondecreasing() const;

  double operator()(double z) const;
  // d sigma / dz evaluated at the pre-activation z.
  double derivative(double z) const;

  void apply(Eigen::Ref<Eigen::MatrixXd> z) const;
  Eigen::MatrixXd derivative(const Eigen::MatrixXd& z) const;

  // "relu", "leaky_relu 0.01", "affine 2 1", ... Inverse of parse().
  std::string to_string() const;
  static Activation parse(const std::string& text);

  friend bool operator==(const Activation&, const Activation&) = default;

 private:
  Activation(ActivationTag tag, double a, double b) : tag_(tag), a_(a), b_(b) {}

  ActivationTag tag_ = ActivationTag::identity;
  double a_ = 1.0;
  double b_ = 0.0;
};

}  // namespace sparsenorm
