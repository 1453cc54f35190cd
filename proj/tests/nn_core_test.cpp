#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sparsenorm/checkpoint.hpp"
#include "sparsenorm/network.hpp"
#include "sparsenorm/training.hpp"
#include "support/gradient_oracle.hpp"
#include "support/random_cases.hpp"

namespace sparsenorm {
namespace {

Network single_layer(Eigen::MatrixXd w, Eigen::VectorXd b, Activation act) {
  NetworkSpec spec = NetworkSpec::uniform({static_cast<std::size_t>(w.cols()), static_cast<std::size_t>(w.rows())}, act);
  Network net = build_network(spec, Init::xavier(), 0);
  net.weights[0] = std::move(w);
  net.biases[0] = std::move(b);
  return net;
}

TEST(Activation, InvalidParameters) {
  EXPECT_THROW(Activation::leaky_relu(0.0), std::invalid_argument);
  EXPECT_THROW(Activation::leaky_relu(1.0), std::invalid_argument);
  EXPECT_THROW(Activation::elu(0.0), std::invalid_argument);
  EXPECT_NO_THROW(Activation::leaky_relu(0.5));
}

TEST(Activation, StableForLargeInputs) {
  for (double z = -50.0; z <= 50.0; z += 0.5) {
    EXPECT_TRUE(std::isfinite(Activation::softplus()(z)));
    EXPECT_TRUE(std::isfinite(Activation::elu(1.3)(z)));
    EXPECT_TRUE(std::isfinite(Activation::sigmoid()(z)));
  }
  EXPECT_NEAR(Activation::softplus()(50.0), 50.0, 1e-12);
  EXPECT_NEAR(Activation::softplus()(-50.0), std::exp(-50.0), 1e-30);
  EXPECT_TRUE(std::isfinite(Activation::softplus()(800.0)));
}

TEST(Activation, ParseRoundTrip) {
  for (const auto& act : {Activation::identity(), Activation::affine(2.5, -1.0), Activation::relu(),
                          Activation::leaky_relu(0.1), Activation::elu(0.7), Activation::softplus(),
                          Activation::sigmoid()})
    EXPECT_EQ(Activation::parse(act.to_string()), act);
  EXPECT_THROW(Activation::parse("tanh"), std::invalid_argument);
}

TEST(BuildNetwork, ZeroSpreadConstantMean) {
  Network net = build_network(NetworkSpec::uniform({2, 2}, Activation::identity()), Init::constant_mean({0.5}, 0.0), 7);
  EXPECT_TRUE((net.weights[0].array() == 0.5).all());
}

TEST(BuildNetwork, SameSeedIsBitIdentical) {
  auto spec = NetworkSpec::uniform({5, 4, 3}, Activation::relu());
  for (const auto& init : {Init::xavier(), Init::kaiming(), Init::constant_mean({0.1, -0.2}, 0.3)}) {
    Network a = build_network(spec, init, 42);
    Network b = build_network(spec, init, 42);
    for (std::size_t i = 0; i < a.layers(); ++i) EXPECT_TRUE(a.weights[i] == b.weights[i]);
  }
}

TEST(BuildNetwork, XavierMeanNearZero) {
  Network net = build_network(NetworkSpec::uniform({1000, 1000}, Activation::identity()), Init::xavier(), 3);
  EXPECT_NEAR(net.weights[0].mean(), 0.0, 0.01);
}

TEST(BuildNetwork, RejectsBadInit) {
  auto spec = NetworkSpec::uniform({2, 2}, Activation::identity());
  EXPECT_THROW(build_network(spec, Init::constant_mean({NAN}, 0.0), 0), std::invalid_argument);
  EXPECT_THROW(build_network(spec, Init::constant_mean({0.1}, -1.0), 0), std::invalid_argument);
  NetworkSpec bad = spec;
  bad.use_bias.push_back(true);
  EXPECT_THROW(build_network(bad, Init::xavier(), 0), std::invalid_argument);
}

TEST(Forward, HandExamples) {
  Network id = single_layer(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), Activation::identity());
  auto h = forward(id, Eigen::Vector2d(3, -1));
  EXPECT_EQ(h[0], Eigen::Vector2d(3, -1));

  Network sum = single_layer(Eigen::RowVector2d(1, 1), Eigen::VectorXd::Zero(1), Activation::identity());
  EXPECT_EQ(forward(sum, Eigen::Vector2d(2, 3))[0][0], 5.0);

  Network sig = single_layer(Eigen::RowVector2d(0, 0), Eigen::VectorXd::Zero(1), Activation::sigmoid());
  EXPECT_EQ(forward(sig, Eigen::Vector2d(17, -4))[0][0], 0.5);
}

TEST(Forward, DimensionMismatch) {
  Network net = build_network(NetworkSpec::uniform({3, 2}, Activation::relu()), Init::xavier(), 1);
  EXPECT_THROW(forward(net, Eigen::Vector2d(1, 2)), std::invalid_argument);
  EXPECT_THROW(forward(net, Eigen::Vector3d(1, NAN, 2)), std::invalid_argument);
}

TEST(Forward, AffineOneZeroMatchesIdentityBitForBit) {
  Rng rng = make_rng(9);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    Network a = build_network(NetworkSpec::uniform({6, 5, 4}, Activation::identity()), Init::kaiming(), trial);
    Network b = a;
    b.spec.activations.assign(2, Activation::affine(1.0, 0.0));
    Eigen::VectorXd x(6);
    for (Eigen::Index j = 0; j < 6; ++j) x[j] = n(rng);
    auto ha = forward(a, x), hb = forward(b, x);
    for (std::size_t i = 0; i < ha.size(); ++i) EXPECT_TRUE(ha[i] == hb[i]);
  }
}

TEST(Backward, ZeroSeedGivesZeroGradients) {
  Network net = build_network(NetworkSpec::uniform({4, 3, 2}, Activation::softplus()), Init::xavier(), 5);
  Gradients g = backward(net, Eigen::Vector4d(1, 2, 3, 4), Eigen::Vector2d::Zero());
  for (std::size_t i = 0; i < net.layers(); ++i) {
    EXPECT_TRUE(g.weights[i].isZero(0.0));
    EXPECT_TRUE(g.biases[i].isZero(0.0));
  }
}

TEST(Backward, LinearLayerDerivative) {
  Network net = single_layer(Eigen::RowVector3d(0.3, -0.2, 0.9), Eigen::VectorXd::Constant(1, 0.1), Activation::identity());
  Eigen::Vector3d x(1.5, -2.0, 4.0);
  Gradients g = backward(net, x, Eigen::VectorXd::Ones(1));
  EXPECT_EQ(Eigen::VectorXd(g.weights[0].row(0).transpose()), Eigen::VectorXd(x));
  EXPECT_EQ(g.biases[0][0], 1.0);
}

TEST(Backward, TwoLayerReluMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(seed, 77);
    Network net = build_network(NetworkSpec::uniform({5, 6, 3}, Activation::relu()), Init::kaiming(), seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& b : net.biases)
      for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = 0.2 * n(rng);
    Eigen::VectorXd x(5), c(3);
    do {
      for (Eigen::Index j = 0; j < 5; ++j) x[j] = n(rng);
    } while (testing::min_abs_preactivation(net, x) < 1e-3);
    for (Eigen::Index j = 0; j < 3; ++j) c[j] = n(rng);
    EXPECT_LT(testing::check_against_finite_differences(net, x, c).max_rel_error, 1e-4) << "seed " << seed;
  }
}

TEST(Backward, RandomNetworksAllActivations) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto gc = testing::random_gradient_case(seed);
    EXPECT_LT(testing::check_against_finite_differences(gc.net, gc.input, gc.readout).max_rel_error, 1e-4)
        << "seed " << seed;
  }
}

TEST(Backward, HiddenScaleIsChainedThrough) {
  Network net = build_network(NetworkSpec::uniform({3, 4, 2}, Activation::softplus()), Init::xavier(), 11);
  Eigen::MatrixXd x = Eigen::Vector3d(0.5, -1.0, 2.0);
  Eigen::MatrixXd s = Eigen::Vector4d(2.0, 0.0, 1.0, 3.0);
  HiddenScaler scaler = [&](std::size_t, const Eigen::MatrixXd&) { return s; };
  Eigen::MatrixXd c = Eigen::Vector2d(1.0, -0.5);
  Gradients g = backward(net, forward_batch(net, x, scaler), c);
  auto loss = [&](const Network& n) { return (c.transpose() * forward_batch(n, x, scaler).output())(0, 0); };
  Network probe = net;
  const double step = 1e-6;
  probe.weights[0](0, 1) += step;
  double up = loss(probe);
  probe.weights[0](0, 1) -= 2 * step;
  double down = loss(probe);
  EXPECT_NEAR(g.weights[0](0, 1), (up - down) / (2 * step), 1e-6);
  EXPECT_TRUE(g.weights[0].row(1).isZero(0.0));  // dropped unit
}

TEST(Backward, ConnectivityBlocksGradient) {
  Network net = build_network(NetworkSpec::uniform({3, 2}, Activation::identity()), Init::xavier(), 2);
  net.connectivity = {(Eigen::MatrixXd(2, 3) << 1, 0, 1, 0, 0.5, 0).finished()};
  Eigen::Vector3d x(1, 2, 3);
  auto h = forward(net, x)[0];
  EXPECT_DOUBLE_EQ(h[1], net.weights[0](1, 1) * 0.5 * 2.0);
  Gradients g = backward(net, x, Eigen::Vector2d(1, 1));
  EXPECT_EQ(g.weights[0](0, 1), 0.0);
  EXPECT_EQ(g.weights[0](1, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.weights[0](1, 1), 0.5 * 2.0);
}

TEST(MaskedMse, Examples) {
  Eigen::Vector2d pred(1, 2), target(1, 4);
  EXPECT_DOUBLE_EQ(masked_mse(pred, target, Eigen::Vector2d(1, 1)), 2.0);
  EXPECT_DOUBLE_EQ(masked_mse(pred, target, Eigen::Vector2d(1, 0)), 0.0);
  EXPECT_DOUBLE_EQ(masked_mse(pred, target, Eigen::Vector2d(0, 0)), 0.0);
  EXPECT_THROW(masked_mse(pred, Eigen::Vector3d(1, 2, 3), Eigen::Vector2d(1, 1)), std::invalid_argument);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  Network net = build_network(NetworkSpec::uniform({3, 2}, Activation::identity()), Init::xavier(), 1);
  net.biases[0] << 0.3, -0.1;
  Network before = net;
  AdamState state = AdamState::for_network(net);
  TrainConfig cfg;
  adam_step(net, Gradients::zeros_like(net), state, cfg);
  EXPECT_TRUE(net.weights[0] == before.weights[0]);
  EXPECT_TRUE(net.biases[0] == before.biases[0]);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Network net = build_network(NetworkSpec::uniform({3, 2}, Activation::identity()), Init::xavier(), 1);
  Network before = net;
  Gradients g = Gradients::zeros_like(net);
  g.weights[0] << 0.5, -2.0, 1e-3, -7.0, 3.0, 0.25;
  g.biases[0] << -1.0, 4.0;
  AdamState state;
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  adam_step(net, g, state, cfg);
  Eigen::MatrixXd dw = net.weights[0] - before.weights[0];
  for (Eigen::Index i = 0; i < dw.size(); ++i) {
    EXPECT_NEAR(dw(i), -0.01 * (g.weights[0](i) > 0 ? 1.0 : -1.0), 1e-7);
  }
  EXPECT_NEAR(net.biases[0][0] - before.biases[0][0], 0.01, 1e-7);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, DecayShrinksWeightsNotBiases) {
  Network net = build_network(NetworkSpec::uniform({3, 2}, Activation::identity()), Init::xavier(), 1);
  net.biases[0] << 0.3, -0.1;
  Network before = net;
  AdamState state;
  TrainConfig cfg;
  cfg.weight_decay = 0.5;
  adam_step(net, Gradients::zeros_like(net), state, cfg);
  EXPECT_TRUE((net.weights[0].array().abs() < before.weights[0].array().abs()).all());
  EXPECT_TRUE(net.weights[0].isApprox(before.weights[0] * (1.0 - cfg.learning_rate * 0.5)));
  EXPECT_TRUE(net.biases[0] == before.biases[0]);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.adam_epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.adam_beta2 = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsExact) {
  NetworkSpec spec;
  spec.widths = {4, 3, 2};
  spec.activations = {Activation::leaky_relu(0.2), Activation::affine(1.5, -0.25)};
  spec.use_bias = {true, false};
  Network net = build_network(spec, Init::kaiming(), 99);
  net.biases[0] << 0.1, -0.2, 1.0 / 3.0;
  std::stringstream buf;
  write_network(buf, net);
  std::string bytes = buf.str();
  EXPECT_EQ(bytes.rfind("SNNET1\n2 4 3 2\nleaky_relu 0.2\n", 0), 0u);
  Network back = read_network(buf);
  EXPECT_EQ(back.spec.widths, spec.widths);
  EXPECT_EQ(back.spec.activations, spec.activations);
  EXPECT_EQ(back.spec.use_bias, spec.use_bias);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_TRUE(back.weights[i] == net.weights[i]);
    EXPECT_TRUE(back.biases[i] == net.biases[i]);
  }
}

TEST(Checkpoint, FloatsAreLittleEndianRowMajor) {
  Network net = single_layer((Eigen::MatrixXd(1, 2) << 1.0, 2.0).finished(), Eigen::VectorXd::Constant(1, -2.0),
                             Activation::identity());
  std::stringstream buf;
  write_network(buf, net);
  std::string s = buf.str();
  std::string header = "SNNET1\n1 2 1\nidentity\n";
  ASSERT_EQ(s.size(), header.size() + 3 * 8);
  // 1.0 = 0x3FF0000000000000, little-endian: last byte 0x3F.
  EXPECT_EQ(static_cast<unsigned char>(s[header.size() + 7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(s[header.size() + 15]), 0x40);  // 2.0
  EXPECT_EQ(static_cast<unsigned char>(s[header.size() + 23]), 0xC0);  // -2.0
}

TEST(Checkpoint, RejectsGarbage) {
  std::stringstream buf("NOTANET\n");
  EXPECT_THROW(read_network(buf), std::runtime_error);
}

}  // namespace
}  // namespace sparsenorm
