#pragma once

// Multilayer perceptron with pattern-sequential backpropagation.
//
// Weight matrices are stored output-major (rows = units of the layer, columns =
// units feeding it), so a layer evaluates  z_in = b + W x,  z = theta(z_in).
// The backward pass produces *correction terms* (alpha * delta * input) which
// are added to the weights, i.e. the step is a descent step on
// E = 1/2 sum ||y - d||^2.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "frfnet/errors.hpp"
#include "frfnet/linalg.hpp"

namespace frfnet {

enum class Activation { sigmoid, linear };

inline const char* to_string(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "linear"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "linear") return Activation::linear;
  throw DataError("unknown activation '" + s + "'");
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
Scalar activate(Activation a, Scalar x) {
  return a == Activation::sigmoid ? sigmoid(x) : x;
}

/// theta'(x); for the sigmoid this is theta(x) (1 - theta(x)).
template <typename Scalar>
Scalar activate_derivative(Activation a, Scalar x) {
  if (a == Activation::linear) return Scalar(1);
  const Scalar s = sigmoid(x);
  return s * (Scalar(1) - s);
}

template <typename Scalar>
struct Layer {
  MatrixX<Scalar> weights;  // units x inputs
  VectorX<Scalar> bias;
  Activation activation = Activation::sigmoid;
};

template <typename Scalar>
struct MlpNetwork {
  std::vector<Layer<Scalar>> layers;

  Eigen::Index input_size() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  Eigen::Index output_size() const { return layers.empty() ? 0 : layers.back().weights.rows(); }

  std::vector<Eigen::Index> sizes() const {
    std::vector<Eigen::Index> out;
    if (layers.empty()) return out;
    out.push_back(input_size());
    for (const auto& l : layers) out.push_back(l.weights.rows());
    return out;
  }

  void validate() const {
    require(!layers.empty(), "network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      require(l.bias.size() == l.weights.rows(), "layer " + std::to_string(i) + ": bias size mismatch");
      if (i > 0)
        require(l.weights.cols() == layers[i - 1].weights.rows(),
                "layer " + std::to_string(i) + ": input size does not chain");
      require(l.weights.allFinite() && l.bias.allFinite(), "layer " + std::to_string(i) + ": non-finite weights");
    }
  }
};

using Mlp = MlpNetwork<double>;

/// Pre-activations and activations of every layer from one forward pass.
/// activations[0] is the input; activations[l + 1] is the output of layer l.
template <typename Scalar>
struct ForwardCache {
  std::vector<VectorX<Scalar>> pre_activations;
  std::vector<VectorX<Scalar>> activations;

  const VectorX<Scalar>& output() const { return activations.back(); }
};

/// Correction terms for every layer; same shapes as the network.
template <typename Scalar>
struct Gradients {
  std::vector<MatrixX<Scalar>> weights;
  std::vector<VectorX<Scalar>> bias;
};

/// Builds a network with weights uniform in [-scale, scale]. A non-positive
/// `init_scale` selects 1/sqrt(fan_in) per layer.
template <typename Scalar = double>
MlpNetwork<Scalar> make_network(const std::vector<Eigen::Index>& sizes, const std::vector<Activation>& activations,
                                std::uint64_t init_seed, double init_scale = 0.0) {
  require(sizes.size() >= 2, "make_network: need at least input and output sizes");
  require(activations.size() == sizes.size() - 1, "make_network: one activation per layer");
  std::mt19937_64 rng(init_seed);
  MlpNetwork<Scalar> net;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    require(sizes[i] > 0 && sizes[i + 1] > 0, "make_network: layer sizes must be positive");
    const double scale = init_scale > 0 ? init_scale : 1.0 / std::sqrt(static_cast<double>(sizes[i]));
    std::uniform_real_distribution<double> dist(-scale, scale);
    Layer<Scalar> layer;
    layer.weights.resize(sizes[i + 1], sizes[i]);
    layer.bias.resize(sizes[i + 1]);
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = Scalar(dist(rng));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = Scalar(dist(rng));
    layer.activation = activations[i];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

template <typename Scalar, typename Derived>
ForwardCache<Scalar> forward(const MlpNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  if (input.size() != net.input_size())
    throw ContractError("forward: input has " + std::to_string(input.size()) + " entries, network expects " +
                        std::to_string(net.input_size()));
  ForwardCache<Scalar> cache;
  cache.activations.reserve(net.layers.size() + 1);
  cache.pre_activations.reserve(net.layers.size());
  cache.activations.emplace_back(input);
  for (const auto& layer : net.layers) {
    VectorX<Scalar> z_in = layer.bias + layer.weights * cache.activations.back();
    VectorX<Scalar> z = z_in.unaryExpr([&](Scalar v) { return activate(layer.activation, v); });
    cache.pre_activations.push_back(std::move(z_in));
    cache.activations.push_back(std::move(z));
  }
  return cache;
}

template <typename Scalar, typename Derived>
VectorX<Scalar> predict(const MlpNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  return forward(net, input).output();
}

/// E = 1/2 sum_i ||y^i - d^i||^2 over all patterns (any consistent layout).
template <typename DerivedY, typename DerivedD>
typename DerivedY::Scalar cost(const Eigen::MatrixBase<DerivedY>& outputs, const Eigen::MatrixBase<DerivedD>& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols())
    throw ContractError("cost: output and target shapes differ");
  return typename DerivedY::Scalar(0.5) * (outputs - targets).squaredNorm();
}

/// Error-information terms propagated from the output layer back to the
/// first layer, scaled by the learning rate into weight and bias corrections.
template <typename Scalar, typename Derived>
Gradients<Scalar> backward(const MlpNetwork<Scalar>& net, const ForwardCache<Scalar>& cache,
                           const Eigen::MatrixBase<Derived>& target, Scalar alpha) {
  const std::size_t n_layers = net.layers.size();
  if (cache.pre_activations.size() != n_layers || cache.activations.size() != n_layers + 1)
    throw ContractError("backward: cache does not belong to this network");
  for (std::size_t l = 0; l < n_layers; ++l)
    if (cache.pre_activations[l].size() != net.layers[l].weights.rows() ||
        cache.activations[l].size() != net.layers[l].weights.cols())
      throw ContractError("backward: stale cache (shape mismatch at layer " + std::to_string(l) + ")");
  if (target.size() != net.output_size()) throw ContractError("backward: target size mismatch");

  Gradients<Scalar> g;
  g.weights.resize(n_layers);
  g.bias.resize(n_layers);

  // output layer: delta_k = (d_k - y_k) theta'(y_in_k)
  const auto& out_layer = net.layers.back();
  VectorX<Scalar> delta = (target - cache.output())
                              .cwiseProduct(cache.pre_activations.back().unaryExpr(
                                  [&](Scalar v) { return activate_derivative(out_layer.activation, v); }));
  for (std::size_t l = n_layers; l-- > 0;) {
    g.weights[l] = alpha * delta * cache.activations[l].transpose();
    g.bias[l] = alpha * delta;
    if (l == 0) break;
    // hidden: delta_j = (sum_k delta_k w_jk) theta'(z_in_j)
    const VectorX<Scalar> delta_in = net.layers[l].weights.transpose() * delta;
    const Activation hidden = net.layers[l - 1].activation;
    delta = delta_in.cwiseProduct(
        cache.pre_activations[l - 1].unaryExpr([&](Scalar v) { return activate_derivative(hidden, v); }));
  }
  return g;
}

/// w_new = w_old + delta_w, elementwise for every layer.
template <typename Scalar>
void apply_update(MlpNetwork<Scalar>& net, const Gradients<Scalar>& g) {
  if (g.weights.size() != net.layers.size() || g.bias.size() != net.layers.size())
    throw ContractError("update: gradient layer count mismatch");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    if (g.weights[l].rows() != layer.weights.rows() || g.weights[l].cols() != layer.weights.cols() ||
        g.bias[l].size() != layer.bias.size())
      throw ContractError("update: gradient shape mismatch at layer " + std::to_string(l));
    layer.weights += g.weights[l];
    layer.bias += g.bias[l];
  }
}

template <typename Scalar>
MlpNetwork<Scalar> update(MlpNetwork<Scalar> net, const Gradients<Scalar>& g) {
  apply_update(net, g);
  return net;
}

/// Input/target pairs stored row-wise: row i of `inputs` is h^i, of `targets` d^i.
template <typename Scalar>
struct TrainingSet {
  MatrixX<Scalar> inputs;
  MatrixX<Scalar> targets;

  Eigen::Index size() const { return inputs.rows(); }

  void validate() const {
    require(inputs.rows() >= 1, "training set is empty");
    require(inputs.rows() == targets.rows(), "training set: input/target pattern counts differ");
  }
};

struct TrainParams {
  double alpha = 0.05;
  int max_epochs = 1000;
  double target_mse = 0.0;
  double l2_lambda = 0.0;
  std::uint64_t shuffle_seed = 1;
  std::uint64_t init_seed = 1;
  double init_scale = 0.0;  // <= 0 selects 1/sqrt(fan_in)
  bool shuffle = true;
};

struct EpochStats {
  double mse = 0.0;        // mean over patterns and outputs of (y - d)^2
  double objective = 0.0;  // E + lambda/2 sum w^2
};

template <typename Scalar>
struct TrainResult {
  MlpNetwork<Scalar> net;
  std::vector<EpochStats> history;
};

template <typename Scalar>
double mean_squared_error(const MlpNetwork<Scalar>& net, const TrainingSet<Scalar>& data) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    sum += static_cast<double>((predict(net, data.inputs.row(i).transpose()) - data.targets.row(i).transpose())
                                   .squaredNorm());
  return sum / static_cast<double>(data.size() * data.targets.cols());
}

template <typename Scalar>
double weight_energy(const MlpNetwork<Scalar>& net) {
  double sum = 0.0;
  for (const auto& l : net.layers) sum += static_cast<double>(l.weights.squaredNorm());
  return sum;
}

namespace detail {

template <typename Scalar>
TrainResult<Scalar> train_impl(MlpNetwork<Scalar> net, const TrainingSet<Scalar>& data, const TrainParams& params,
                               double l2_lambda) {
  data.validate();
  net.validate();
  require(params.alpha > 0, "train: alpha must be positive");
  require(params.max_epochs >= 1, "train: max_epochs must be at least 1");
  require(l2_lambda >= 0, "train: l2_lambda must be non-negative");
  require(data.inputs.cols() == net.input_size() && data.targets.cols() == net.output_size(),
          "train: data shape does not match network");

  std::mt19937_64 rng(params.shuffle_seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Scalar alpha = Scalar(params.alpha);
  const Scalar decay = Scalar(1) - alpha * Scalar(l2_lambda);

  TrainResult<Scalar> result;
  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    if (params.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (const Eigen::Index i : order) {
      const auto cache = forward(net, data.inputs.row(i).transpose());
      const auto g = backward(net, cache, data.targets.row(i).transpose(), alpha);
      if (l2_lambda > 0)
        for (auto& layer : net.layers) layer.weights *= decay;
      apply_update(net, g);
    }
    EpochStats stats;
    stats.mse = mean_squared_error(net, data);
    stats.objective = 0.5 * stats.mse * static_cast<double>(data.size() * data.targets.cols()) +
                      0.5 * l2_lambda * weight_energy(net);
    if (!std::isfinite(stats.mse) || stats.mse > 1e6)
      throw ConvergenceError("train: diverged at epoch " + std::to_string(epoch + 1));
    result.history.push_back(stats);
    if (stats.mse <= params.target_mse) break;
  }
  result.net = std::move(net);
  return result;
}

}  // namespace detail

/// Pattern-sequential training: each epoch visits every pattern once (in a
/// shuffled order) and applies the backpropagation correction immediately.
/// Stops after max_epochs or once the epoch MSE reaches target_mse.
template <typename Scalar>
TrainResult<Scalar> train(MlpNetwork<Scalar> net, const TrainingSet<Scalar>& data, const TrainParams& params) {
  return detail::train_impl(std::move(net), data, params, 0.0);
}

/// Same scheme with L2 weight decay (biases are not penalized). Each update
/// first shrinks the weights by (1 - alpha * lambda). With lambda = 0 the
/// trajectory is identical to train().
template <typename Scalar>
TrainResult<Scalar> train_regularized(MlpNetwork<Scalar> net, const TrainingSet<Scalar>& data,
                                      const TrainParams& params) {
  return detail::train_impl(std::move(net), data, params, params.l2_lambda);
}

}  // namespace frfnet
