#include "gdqn/nn.hpp"

#include <cmath>
#include <string>

#include "gdqn/error.hpp"
#include "gdqn/kernels.hpp"

namespace gdqn {
namespace {

constexpr std::size_t kHiddenUnits = 64;

bool congruent(const std::vector<LayerParams>& a, const std::vector<LayerParams>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].rows != b[l].rows || a[l].cols != b[l].cols ||
        a[l].weights.size() != b[l].weights.size() ||
        a[l].biases.size() != b[l].biases.size()) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

GradientSet zero_gradients_like(const DenseNet& net) {
  GradientSet g;
  g.layers.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    g.layers.push_back({l.rows, l.cols, std::vector<double>(l.weights.size(), 0.0),
                        std::vector<double>(l.biases.size(), 0.0)});
  }
  return g;
}

std::vector<std::size_t> default_layer_dims(std::size_t input, std::size_t actions) {
  return {input, kHiddenUnits, kHiddenUnits, actions};
}

DenseNet init_net(std::span<const std::size_t> layer_dims, Rng& rng) {
  if (layer_dims.size() < 2) {
    throw InvalidConfig("a net needs at least an input and an output dimension");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) throw InvalidConfig("layer dimensions must be positive");
  }
  DenseNet net;
  net.layer_dims.assign(layer_dims.begin(), layer_dims.end());
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    LayerParams layer;
    layer.cols = layer_dims[l];
    layer.rows = layer_dims[l + 1];
    layer.weights.resize(layer.rows * layer.cols);
    layer.biases.assign(layer.rows, 0.0);
    const double limit = 1.0 / std::sqrt(static_cast<double>(layer.cols));
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> x) {
  if (x.size() != net.input_size()) {
    throw ShapeError("input has " + std::to_string(x.size()) + " entries, net expects " +
                     std::to_string(net.input_size()));
  }
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerParams& layer = net.layers[l];
    const bool hidden = l + 1 < net.layers.size();
    std::vector<double> z(layer.rows);
    for (std::size_t j = 0; j < layer.rows; ++j) {
      double s = layer.biases[j];
      for (std::size_t i = 0; i < layer.cols; ++i) s += layer.w(j, i) * a[i];
      z[j] = hidden ? (s > 0.0 ? s : 0.0) : s;
    }
    a = std::move(z);
  }
  return a;
}

LossAndGrad q_loss_and_grad(const DenseNet& net, const InputBatch& inputs,
                            std::span<const std::size_t> actions,
                            std::span<const double> td_targets, const LossOptions& options) {
  LossAndGrad out;
  out.grads = zero_gradients_like(net);
  out.loss = kernels::batch_loss_grad(net, inputs, actions, td_targets, options.clip_td_error,
                                      options.backend, out.grads);
  return out;
}

OptimizerState make_optimizer(const DenseNet& net, const OptimizerConfig& config) {
  if (!(config.learning_rate > 0.0)) throw InvalidConfig("learning rate must be positive");
  if (config.rule != UpdateRule::sgd &&
      (!(config.decay >= 0.0 && config.decay < 1.0) || !(config.epsilon > 0.0))) {
    throw InvalidConfig("optimizer decay must be in [0,1) and epsilon positive");
  }
  OptimizerState opt;
  opt.config = config;
  if (config.rule != UpdateRule::sgd) {
    for (const auto& l : net.layers) {
      opt.first.emplace_back(l.weights.size() + l.biases.size(), 0.0);
      opt.second.emplace_back(l.weights.size() + l.biases.size(), 0.0);
    }
  }
  return opt;
}

void apply_update(DenseNet& net, const GradientSet& grads, OptimizerState& opt) {
  if (!congruent(net.layers, grads.layers)) {
    throw ShapeError("gradient set is not shape-congruent with the net");
  }
  bool finite = true;
  for (const auto& layer : grads.layers) {
    for (double g : layer.weights) finite &= std::isfinite(g);
    for (double g : layer.biases) finite &= std::isfinite(g);
  }
  if (!finite) throw NumericError("non-finite gradient entry; update rejected");
  const OptimizerConfig& cfg = opt.config;
  if (cfg.rule == UpdateRule::sgd) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& p = net.layers[l];
      const auto& g = grads.layers[l];
      for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] -= cfg.learning_rate * g.weights[i];
      for (std::size_t i = 0; i < p.biases.size(); ++i) p.biases[i] -= cfg.learning_rate * g.biases[i];
    }
    ++opt.steps;
    return;
  }
  if (opt.first.size() != net.layers.size()) {
    throw ShapeError("optimizer state is not shape-congruent with the net");
  }

  ++opt.steps;
  const double rho = cfg.decay;
  const double lr = cfg.learning_rate;
  const double eps = cfg.epsilon;
  // Adam bias correction.
  const double beta2 = 0.999;
  const double c1 = 1.0 - std::pow(rho, static_cast<double>(opt.steps));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(opt.steps));

  auto update = [&](double* __restrict param, const double* __restrict grad, double* __restrict m,
                    double* __restrict v, std::size_t n) {
    if (cfg.rule == UpdateRule::rmsprop) {
      // Centered RMSprop as used by the original DQN.
      for (std::size_t k = 0; k < n; ++k) {
        m[k] = rho * m[k] + (1.0 - rho) * grad[k];
        v[k] = rho * v[k] + (1.0 - rho) * grad[k] * grad[k];
        param[k] -= lr * grad[k] / std::sqrt(v[k] - m[k] * m[k] + eps);
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        m[k] = rho * m[k] + (1.0 - rho) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        param[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
      }
    }
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& p = net.layers[l];
    const auto& g = grads.layers[l];
    const std::size_t nw = p.weights.size();
    update(p.weights.data(), g.weights.data(), opt.first[l].data(), opt.second[l].data(), nw);
    update(p.biases.data(), g.biases.data(), opt.first[l].data() + nw, opt.second[l].data() + nw,
           p.biases.size());
  }
}

DenseNet sync_target(const DenseNet& online) { return online; }

}  // namespace gdqn
