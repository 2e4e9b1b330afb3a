#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "nsq/rng.hpp"

namespace nsq {

enum class Activation { tanh, identity };

struct MlpLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out
  Activation activation = Activation::tanh;
};

struct MlpNetwork {
  std::vector<MlpLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weights.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weights.rows()); }
  int num_params() const {
    int n = 0;
    for (const MlpLayer& l : layers)
      n += static_cast<int>(l.weights.size() + l.biases.size());
    return n;
  }
};

inline void validate(const MlpNetwork& net) {
  if (net.layers.empty()) throw std::invalid_argument("mlp: no layers");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const MlpLayer& layer = net.layers[l];
    if (layer.weights.rows() != layer.biases.size())
      throw std::invalid_argument("mlp: bias length != output dim");
    if (l > 0 && layer.weights.cols() != net.layers[l - 1].weights.rows())
      throw std::invalid_argument("mlp: layer dimensions do not chain");
    if (!layer.weights.allFinite() || !layer.biases.allFinite())
      throw std::invalid_argument("mlp: non-finite parameters");
  }
}

// Glorot-uniform initialized network; dims = {in, h1, ..., out}.
inline MlpNetwork make_mlp(const std::vector<int>& dims, const std::vector<Activation>& activations,
                           std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least one layer");
  if (activations.size() != dims.size() - 1)
    throw std::invalid_argument("make_mlp: one activation per layer required");
  SplitMix64 rng(seed);
  MlpNetwork net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    if (in < 1 || out < 1) throw std::invalid_argument("make_mlp: nonpositive layer dim");
    MlpLayer layer;
    layer.weights.resize(out, in);
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) layer.weights(i, j) = rng.uniform(-a, a);
    layer.biases = Eigen::VectorXd::Zero(out);
    layer.activation = activations[l];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;       // per-layer input (in x batch)
  std::vector<Eigen::MatrixXd> activations;  // per-layer output (out x batch)
};

// x is (input_dim x batch); returns (output_dim x batch).
inline Eigen::MatrixXd mlp_forward(const MlpNetwork& net, const Eigen::MatrixXd& x,
                                   MlpCache* cache = nullptr) {
  validate(net);
  if (x.rows() != net.input_dim()) throw std::invalid_argument("mlp_forward: input dim mismatch");
  Eigen::MatrixXd h = x;
  if (cache) {
    cache->inputs.clear();
    cache->activations.clear();
  }
  for (const MlpLayer& layer : net.layers) {
    if (cache) cache->inputs.push_back(h);
    Eigen::MatrixXd pre = (layer.weights * h).colwise() + layer.biases;
    h = layer.activation == Activation::tanh ? pre.array().tanh().matrix() : pre;
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Backpropagates upstream = dL/d(output), (out x batch). Returns dL/d(input)
// and fills the parameter gradients when grads is non-null.
inline Eigen::MatrixXd mlp_backward(const MlpNetwork& net, const MlpCache& cache,
                                    const Eigen::MatrixXd& upstream, MlpGrads* grads) {
  if (cache.inputs.size() != net.layers.size() || cache.activations.size() != net.layers.size())
    throw std::invalid_argument("mlp_backward: cache does not match network");
  if (grads) {
    grads->weights.assign(net.layers.size(), Eigen::MatrixXd());
    grads->biases.assign(net.layers.size(), Eigen::VectorXd());
  }
  Eigen::MatrixXd g = upstream;
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const MlpLayer& layer = net.layers[static_cast<std::size_t>(l)];
    Eigen::MatrixXd delta;
    if (layer.activation == Activation::tanh) {
      const Eigen::MatrixXd& out = cache.activations[static_cast<std::size_t>(l)];
      delta = g.array() * (1.0 - out.array().square());
    } else {
      delta = g;
    }
    if (grads) {
      grads->weights[static_cast<std::size_t>(l)] =
          delta * cache.inputs[static_cast<std::size_t>(l)].transpose();
      grads->biases[static_cast<std::size_t>(l)] = delta.rowwise().sum();
    }
    g = layer.weights.transpose() * delta;
  }
  return g;
}

inline void mlp_apply_sgd(MlpNetwork& net, const MlpGrads& grads, double learning_rate) {
  if (grads.weights.size() != net.layers.size())
    throw std::invalid_argument("mlp_apply_sgd: gradient count mismatch");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    net.layers[l].weights -= learning_rate * grads.weights[l];
    net.layers[l].biases -= learning_rate * grads.biases[l];
  }
}

}  // namespace nsq
