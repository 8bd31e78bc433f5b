#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "frfnet/mlp.hpp"

using namespace frfnet;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

TrainingSet<double> xor_set() {
  TrainingSet<double> s;
  s.inputs.resize(4, 2);
  s.inputs << 0, 0, 0, 1, 1, 0, 1, 1;
  s.targets.resize(4, 1);
  s.targets << 0, 1, 1, 0;
  return s;
}

// -dE/dw by central differences, evaluated in long double.
double fd_descent(const Mlp& net, std::size_t layer, Eigen::Index r, Eigen::Index c, bool bias,
                  const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
  const long double h = 1e-6L;
  auto energy = [&](long double shift) {
    MlpNetwork<long double> ld;
    for (const auto& l : net.layers)
      ld.layers.push_back({l.weights.cast<long double>(), l.bias.cast<long double>(), l.activation});
    auto& target = bias ? ld.layers[layer].bias(r) : ld.layers[layer].weights(r, c);
    target += shift;
    const VectorX<long double> y = predict(ld, VectorX<long double>(x.cast<long double>()));
    return 0.5L * (y - d.cast<long double>()).squaredNorm();
  };
  return static_cast<double>(-(energy(h) - energy(-h)) / (2.0L * h));
}

double gradient_relative_error(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
  const auto g = backward(net, forward(net, x), d, 1.0);
  double diff = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (Eigen::Index c = 0; c < net.layers[l].weights.cols(); ++c)
      for (Eigen::Index r = 0; r < net.layers[l].weights.rows(); ++r) {
        const double fd = fd_descent(net, l, r, c, false, x, d);
        diff += std::pow(g.weights[l](r, c) - fd, 2);
        norm_a += std::pow(g.weights[l](r, c), 2);
        norm_b += fd * fd;
      }
    for (Eigen::Index r = 0; r < net.layers[l].bias.size(); ++r) {
      const double fd = fd_descent(net, l, r, 0, true, x, d);
      diff += std::pow(g.bias[l](r) - fd, 2);
      norm_a += std::pow(g.bias[l](r), 2);
      norm_b += fd * fd;
    }
  }
  return std::sqrt(diff) / std::max(std::sqrt(std::max(norm_a, norm_b)), 1e-300);
}

}  // namespace

TEST(Forward, ZeroWeightsGiveHalf) {
  auto net = make_network<double>({3, 4, 2}, {Activation::sigmoid, Activation::sigmoid}, 1);
  for (auto& l : net.layers) l.weights.setZero(), l.bias.setZero();
  EXPECT_TRUE(predict(net, Eigen::Vector3d(1, -2, 3)).isApprox(Eigen::Vector2d(0.5, 0.5)));
}

TEST(Forward, OneOneOneHandValue) {
  auto net = make_network<double>({1, 1, 1}, {Activation::sigmoid, Activation::sigmoid}, 1);
  for (auto& l : net.layers) l.weights.setOnes(), l.bias.setZero();
  const auto cache = forward(net, Eigen::VectorXd::Zero(1));
  EXPECT_DOUBLE_EQ(cache.activations[1](0), 0.5);
  EXPECT_NEAR(cache.output()(0), 0.622459, 1e-6);
}

TEST(Forward, LinearIdentityLayerPassesHidden) {
  auto net = make_network<double>({3, 4, 4}, {Activation::sigmoid, Activation::linear}, 2);
  net.layers[1].weights.setIdentity();
  net.layers[1].bias.setZero();
  const auto cache = forward(net, Eigen::Vector3d(0.1, 0.2, 0.3));
  EXPECT_EQ(cache.output(), cache.activations[1]);
}

TEST(Forward, RejectsWrongInputSize) {
  const auto net = make_network<double>({3, 2}, {Activation::sigmoid}, 1);
  EXPECT_THROW(predict(net, Eigen::Vector2d(1, 2)), ContractError);
}

TEST(Cost, HandCases) {
  const Eigen::Vector2d y(1, 0), d(0, 0);
  EXPECT_DOUBLE_EQ(cost(y, d), 0.5);
  EXPECT_DOUBLE_EQ(cost(y, y), 0.0);
}

TEST(Cost, MatchesDoubleLoop) {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd y(7, 3), d(7, 3);
  for (int i = 0; i < 7; ++i) y.row(i) = random_vector(3, rng).transpose(), d.row(i) = random_vector(3, rng).transpose();
  double sum = 0.0;
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 3; ++k) sum += 0.5 * (y(i, k) - d(i, k)) * (y(i, k) - d(i, k));
  EXPECT_NEAR(cost(y, d), sum, 1e-12);
}

TEST(Sigmoid, DerivativeIdentity) {
  for (double x : {-5.0, -0.3, 0.0, 1.7, 8.0}) {
    const double s = sigmoid(x);
    EXPECT_NEAR(activate_derivative(Activation::sigmoid, x), s * (1 - s), 1e-15);
    const double h = 1e-6;
    EXPECT_NEAR(activate_derivative(Activation::sigmoid, x), (sigmoid(x + h) - sigmoid(x - h)) / (2 * h), 1e-9);
  }
}

TEST(Backward, ZeroErrorGivesZeroCorrections) {
  const auto net = make_network<double>({3, 5, 2}, {Activation::sigmoid, Activation::sigmoid}, 3);
  const Eigen::Vector3d x(0.3, -0.1, 0.7);
  const auto cache = forward(net, x);
  const auto g = backward(net, cache, cache.output(), 0.5);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_TRUE(g.weights[l].isZero(0.0));
    EXPECT_TRUE(g.bias[l].isZero(0.0));
  }
}

TEST(Backward, OneOneOneSymbolic) {
  auto net = make_network<double>({1, 1, 1}, {Activation::sigmoid, Activation::sigmoid}, 1);
  for (auto& l : net.layers) l.weights.setOnes(), l.bias.setZero();
  const double x = 0.0, d = 1.0, alpha = 0.25;
  const double z = sigmoid(x), y = sigmoid(z);
  const double delta_k = (d - y) * y * (1 - y);
  const double delta_j = delta_k * 1.0 * z * (1 - z);
  const auto g = backward(net, forward(net, Eigen::VectorXd::Constant(1, x)), Eigen::VectorXd::Constant(1, d), alpha);
  EXPECT_NEAR(g.weights[1](0, 0), alpha * delta_k * z, 1e-9);
  EXPECT_NEAR(g.bias[1](0), alpha * delta_k, 1e-9);
  EXPECT_NEAR(g.weights[0](0, 0), alpha * delta_j * x, 1e-9);
  EXPECT_NEAR(g.bias[0](0), alpha * delta_j, 1e-9);
}

TEST(Backward, FiniteDifferenceSmallNet) {
  std::mt19937_64 rng(5);
  const auto net = make_network<double>({4, 6, 3}, {Activation::sigmoid, Activation::sigmoid}, 17, 1.0);
  const Eigen::VectorXd x = random_vector(4, rng), d = random_vector(3, rng).cwiseAbs();
  EXPECT_LT(gradient_relative_error(net, x, d), 1e-6);
}

TEST(Backward, FiniteDifferenceManyNetworks) {
  std::mt19937_64 rng(99);
  const std::vector<std::vector<Eigen::Index>> shapes{{100, 30, 34}, {100, 30, 1}, {2, 4, 1}, {5, 3}, {3, 7, 5, 2}};
  int checked = 0;
  for (int i = 0; i < 20; ++i) {
    const auto& shape = shapes[static_cast<std::size_t>(i) % shapes.size()];
    std::vector<Activation> acts(shape.size() - 1, Activation::sigmoid);
    if (i % 2 == 1) acts.back() = Activation::linear;
    const auto net = make_network<double>(shape, acts, 1000 + static_cast<std::uint64_t>(i), i % 3 == 0 ? 0.0 : 1.0);
    const Eigen::VectorXd x = random_vector(shape.front(), rng, 2.0);
    const Eigen::VectorXd d = random_vector(shape.back(), rng);
    EXPECT_LT(gradient_relative_error(net, x, d), 1e-6) << "network " << i;
    ++checked;
  }
  EXPECT_GE(checked, 20);
}

TEST(Backward, RejectsStaleCache) {
  const auto a = make_network<double>({3, 4, 2}, {Activation::sigmoid, Activation::sigmoid}, 1);
  const auto b = make_network<double>({3, 5, 2}, {Activation::sigmoid, Activation::sigmoid}, 1);
  const auto cache = forward(a, Eigen::Vector3d(1, 2, 3));
  EXPECT_THROW(backward(b, cache, Eigen::Vector2d(0, 1), 0.1), ContractError);
}

TEST(Update, IdentityCases) {
  const auto net = make_network<double>({3, 4, 2}, {Activation::sigmoid, Activation::sigmoid}, 8);
  const Eigen::Vector3d x(0.5, 0.1, -0.4);
  const auto zero = backward(net, forward(net, x), Eigen::Vector2d(1, 0), 0.0);
  const auto same = update(net, zero);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(same.layers[l].weights, net.layers[l].weights);
    EXPECT_EQ(same.layers[l].bias, net.layers[l].bias);
  }
}

TEST(Update, SmallStepDecreasesCost) {
  const auto net = make_network<double>({3, 4, 2}, {Activation::sigmoid, Activation::sigmoid}, 8);
  const Eigen::Vector3d x(0.5, 0.1, -0.4);
  const Eigen::Vector2d d(1, 0);
  const auto stepped = update(net, backward(net, forward(net, x), d, 1e-4));
  EXPECT_LT(cost(predict(stepped, x), d), cost(predict(net, x), d));
}

TEST(Train, XorConvergesForMostSeeds) {
  const auto data = xor_set();
  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainParams p;
    p.alpha = 0.5;
    p.max_epochs = 5000;
    p.target_mse = 0.01;
    p.init_seed = seed;
    p.shuffle_seed = seed;
    auto net = make_network<double>({2, 4, 1}, {Activation::sigmoid, Activation::sigmoid}, seed, 1.0);
    const auto result = train(net, data, p);
    if (result.history.back().mse < 0.01) ++solved;
  }
  EXPECT_GE(solved, 4);
}

TEST(Train, EpochContract) {
  const auto data = xor_set();
  const auto net = make_network<double>({2, 4, 1}, {Activation::sigmoid, Activation::sigmoid}, 1);
  TrainParams p;
  p.max_epochs = 0;
  EXPECT_THROW(train(net, data, p), ContractError);
  p.max_epochs = 1;
  EXPECT_EQ(train(net, data, p).history.size(), 1u);
  p.max_epochs = 37;
  p.target_mse = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(train(net, data, p).history.size(), 37u);
}

TEST(Train, Deterministic) {
  const auto data = xor_set();
  const auto net = make_network<double>({2, 4, 1}, {Activation::sigmoid, Activation::sigmoid}, 3);
  TrainParams p;
  p.max_epochs = 50;
  const auto a = train(net, data, p), b = train(net, data, p);
  EXPECT_EQ(a.net.layers[0].weights, b.net.layers[0].weights);
  EXPECT_EQ(a.history.back().mse, b.history.back().mse);
}

TEST(Train, DivergenceGuard) {
  TrainingSet<double> data;
  data.inputs = Eigen::MatrixXd::Constant(4, 1, 1e3);
  data.targets = Eigen::MatrixXd::Constant(4, 1, 1e3);
  const auto net = make_network<double>({1, 3, 1}, {Activation::linear, Activation::linear}, 1);
  TrainParams p;
  p.alpha = 1.0;
  p.max_epochs = 10;
  EXPECT_THROW(train(net, data, p), ConvergenceError);
}

TEST(TrainRegularized, ZeroLambdaMatchesTrain) {
  const auto data = xor_set();
  const auto net = make_network<double>({2, 4, 1}, {Activation::sigmoid, Activation::sigmoid}, 4, 1.0);
  TrainParams p;
  p.alpha = 0.5;
  p.max_epochs = 300;
  p.l2_lambda = 0.0;
  const auto a = train(net, data, p), b = train_regularized(net, data, p);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(a.net.layers[l].weights, b.net.layers[l].weights);
    EXPECT_EQ(a.net.layers[l].bias, b.net.layers[l].bias);
  }
}

TEST(TrainRegularized, PenaltyShrinksWeights) {
  const auto data = xor_set();
  const auto net = make_network<double>({2, 4, 1}, {Activation::sigmoid, Activation::sigmoid}, 2, 1.0);
  TrainParams p;
  p.alpha = 0.5;
  p.max_epochs = 3000;
  const double plain = weight_energy(train(net, data, p).net);
  p.l2_lambda = 1e-2;
  const double decayed = weight_energy(train_regularized(net, data, p).net);
  EXPECT_LT(decayed, plain);
}

TEST(TrainRegularized, HugeLambdaCollapses) {
  const auto data = xor_set();
  auto net = make_network<double>({2, 4, 1}, {Activation::sigmoid, Activation::sigmoid}, 2, 1.0);
  for (auto& l : net.layers) l.bias.setZero();
  TrainParams p;
  p.alpha = 1e-3;
  p.l2_lambda = 1e3;  // decay factor 0 each step
  p.max_epochs = 200;
  const auto result = train_regularized(net, data, p);
  EXPECT_LT(weight_energy(result.net), 1e-6);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(predict(result.net, Eigen::VectorXd(data.inputs.row(i).transpose()))(0), 0.5, 0.05);
}
