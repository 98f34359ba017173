#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gdqn/rng.hpp"

namespace gdqn {

// One affine layer: `weights` is rows x cols, row-major, where rows is the
// output width and cols the input width.
struct LayerParams {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

  bool operator==(const LayerParams&) const = default;
};

// Fully connected net. Hidden layers use max(0, x); the output layer is
// affine. Used for both the online Q-function and its frozen target copy.
struct DenseNet {
  std::vector<std::size_t> layer_dims;
  std::vector<LayerParams> layers;

  std::size_t input_size() const { return layer_dims.front(); }
  std::size_t output_size() const { return layer_dims.back(); }
  std::size_t parameter_count() const;

  bool operator==(const DenseNet&) const = default;
};

// Shape-congruent with the DenseNet it was computed for.
struct GradientSet {
  std::vector<LayerParams> layers;

  bool operator==(const GradientSet&) const = default;
};

GradientSet zero_gradients_like(const DenseNet& net);

// Default Q-network shape: input, two hidden layers of 64, one output per
// action.
std::vector<std::size_t> default_layer_dims(std::size_t input, std::size_t actions);

DenseNet init_net(std::span<const std::size_t> layer_dims, Rng& rng);

std::vector<double> forward(const DenseNet& net, std::span<const double> x);

// Row-major batch of input vectors.
struct InputBatch {
  std::size_t size = 0;
  std::size_t width = 0;
  std::vector<double> data;

  InputBatch() = default;
  InputBatch(std::size_t n, std::size_t w) : size(n), width(w), data(n * w, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * width, width}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * width, width}; }
};

enum class Backend { serial, parallel };

struct LossOptions {
  // Clip the TD error to [-1, 1] in the gradient (Huber loss).
  bool clip_td_error = false;
  Backend backend = Backend::parallel;
};

struct LossAndGrad {
  double loss = 0.0;
  GradientSet grads;
};

// Mean over the batch of (target - Q(input)[action])^2 and its gradient.
// Only the selected action's output receives gradient.
LossAndGrad q_loss_and_grad(const DenseNet& net, const InputBatch& inputs,
                            std::span<const std::size_t> actions,
                            std::span<const double> td_targets,
                            const LossOptions& options = {});

enum class UpdateRule { sgd, rmsprop, adam };

struct OptimizerConfig {
  UpdateRule rule = UpdateRule::rmsprop;
  double learning_rate = 1e-2;
  double decay = 0.95;    // rmsprop averaging, or adam beta1 (beta2 is 0.999)
  double epsilon = 1e-2;

  bool operator==(const OptimizerConfig&) const = default;
};

struct OptimizerState {
  OptimizerConfig config;
  // rmsprop: running mean of g and of g^2 (centered). adam: first and second
  // moments.
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::uint64_t steps = 0;

  bool operator==(const OptimizerState&) const = default;
};

OptimizerState make_optimizer(const DenseNet& net, const OptimizerConfig& config);

// Moves parameters against the gradient. Throws NumericError (leaving net and
// optimizer untouched) if the gradient holds a NaN or infinity.
void apply_update(DenseNet& net, const GradientSet& grads, OptimizerState& opt);

// Deep copy used as the frozen target network.
DenseNet sync_target(const DenseNet& online);

}  // namespace gdqn
