#include "gdqn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "gdqn/error.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace gdqn::kernels {
namespace {

inline double relu(double s) { return s > 0.0 ? s : 0.0; }

// Per-sample loss term and dLoss/dQ before the 1/batch factor.
struct ErrorTerm {
  double loss;
  double slope;
};

inline ErrorTerm error_term(double target, double q, bool clip) {
  const double err = target - q;
  if (!clip || std::fabs(err) <= 1.0) return {err * err, -2.0 * err};
  const double sign = err > 0.0 ? 1.0 : -1.0;
  return {2.0 * std::fabs(err) - 1.0, -2.0 * sign};
}

void check_batch(const DenseNet& net, const InputBatch& inputs,
                 std::span<const std::size_t> actions, std::span<const double> td_targets) {
  if (inputs.size == 0) throw PreconditionError("empty batch");
  if (inputs.width != net.input_size()) {
    throw ShapeError("batch width " + std::to_string(inputs.width) +
                     " does not match net input " + std::to_string(net.input_size()));
  }
  if (actions.size() != inputs.size || td_targets.size() != inputs.size) {
    throw ShapeError("batch, action and target lists differ in length");
  }
  for (std::size_t a : actions) {
    if (a >= net.output_size()) {
      throw IndexError("action index " + std::to_string(a) + " out of range for " +
                       std::to_string(net.output_size()) + " outputs");
    }
  }
}

void check_forward(const DenseNet& net, const InputBatch& inputs) {
  if (inputs.width != net.input_size()) {
    throw ShapeError("batch width " + std::to_string(inputs.width) +
                     " does not match net input " + std::to_string(net.input_size()));
  }
}

// Reusable buffers for the parallel path: activations per layer and the
// indices of nonzero entries of each layer input, per sample.
struct Workspace {
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<std::vector<std::uint32_t>>> nonzero;
  std::vector<double> delta;
  std::vector<double> prev_delta;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

void parallel_forward_layers(const DenseNet& net, const InputBatch& inputs, Workspace& ws) {
  const std::size_t n_layers = net.layers.size();
  const long batch = static_cast<long>(inputs.size);
  ws.acts.resize(n_layers + 1);
  ws.nonzero.resize(n_layers);
  ws.acts[0].assign(inputs.data.begin(), inputs.data.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const LayerParams& layer = net.layers[l];
    const bool hidden = l + 1 < n_layers;
    const std::vector<double>& in = ws.acts[l];
    std::vector<double>& out = ws.acts[l + 1];
    out.assign(inputs.size * layer.rows, 0.0);
    auto& nz = ws.nonzero[l];
    nz.resize(inputs.size);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < batch; ++b) {
      const double* x = in.data() + b * layer.cols;
      auto& idx = nz[b];
      idx.clear();
      for (std::size_t i = 0; i < layer.cols; ++i) {
        if (x[i] != 0.0) idx.push_back(static_cast<std::uint32_t>(i));
      }
      double* y = out.data() + b * layer.rows;
      for (std::size_t j = 0; j < layer.rows; ++j) {
        const double* wrow = layer.weights.data() + j * layer.cols;
        double s = layer.biases[j];
        for (std::uint32_t i : idx) s += wrow[i] * x[i];
        y[j] = hidden ? relu(s) : s;
      }
    }
  }
}

}  // namespace

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void batch_forward(const DenseNet& net, const InputBatch& inputs, std::vector<double>& out) {
  check_forward(net, inputs);
  const std::size_t n_out = net.output_size();
  out.assign(inputs.size * n_out, 0.0);
  for (std::size_t b = 0; b < inputs.size; ++b) {
    std::vector<double> q = forward(net, inputs.row(b));
    std::copy(q.begin(), q.end(), out.begin() + b * n_out);
  }
}

double batch_loss_grad(const DenseNet& net, const InputBatch& inputs,
                       std::span<const std::size_t> actions,
                       std::span<const double> td_targets, bool clip_td_error,
                       GradientSet& grads) {
  check_batch(net, inputs, actions, td_targets);
  const std::size_t n_layers = net.layers.size();
  for (auto& g : grads.layers) {
    std::fill(g.weights.begin(), g.weights.end(), 0.0);
    std::fill(g.biases.begin(), g.biases.end(), 0.0);
  }
  const double inv_batch = 1.0 / static_cast<double>(inputs.size);
  double loss = 0.0;
  std::vector<std::vector<double>> acts(n_layers + 1);
  for (std::size_t b = 0; b < inputs.size; ++b) {
    auto x = inputs.row(b);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
      const LayerParams& layer = net.layers[l];
      const bool hidden = l + 1 < n_layers;
      acts[l + 1].assign(layer.rows, 0.0);
      for (std::size_t j = 0; j < layer.rows; ++j) {
        double s = layer.biases[j];
        for (std::size_t i = 0; i < layer.cols; ++i) s += layer.w(j, i) * acts[l][i];
        acts[l + 1][j] = hidden ? relu(s) : s;
      }
    }
    const double q = acts[n_layers][actions[b]];
    const ErrorTerm term = error_term(td_targets[b], q, clip_td_error);
    loss += term.loss;

    std::vector<double> delta(net.output_size(), 0.0);
    delta[actions[b]] = term.slope * inv_batch;
    for (std::size_t l = n_layers; l-- > 0;) {
      const LayerParams& layer = net.layers[l];
      LayerParams& g = grads.layers[l];
      const std::vector<double>& in = acts[l];
      for (std::size_t j = 0; j < layer.rows; ++j) {
        g.biases[j] += delta[j];
        for (std::size_t i = 0; i < layer.cols; ++i) g.w(j, i) += delta[j] * in[i];
      }
      if (l == 0) break;
      std::vector<double> prev(layer.cols, 0.0);
      for (std::size_t i = 0; i < layer.cols; ++i) {
        if (!(in[i] > 0.0)) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < layer.rows; ++j) s += layer.w(j, i) * delta[j];
        prev[i] = s;
      }
      delta = std::move(prev);
    }
  }
  return loss * inv_batch;
}

}  // namespace serial

namespace parallel {

void batch_forward(const DenseNet& net, const InputBatch& inputs, std::vector<double>& out) {
  check_forward(net, inputs);
  Workspace& ws = workspace();
  parallel_forward_layers(net, inputs, ws);
  out = ws.acts.back();
}

double batch_loss_grad(const DenseNet& net, const InputBatch& inputs,
                       std::span<const std::size_t> actions,
                       std::span<const double> td_targets, bool clip_td_error,
                       GradientSet& grads) {
  check_batch(net, inputs, actions, td_targets);
  Workspace& ws = workspace();
  parallel_forward_layers(net, inputs, ws);

  const std::size_t n_layers = net.layers.size();
  const std::size_t batch = inputs.size;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const std::size_t n_out = net.output_size();

  double loss = 0.0;
  ws.delta.assign(batch * n_out, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const double q = ws.acts[n_layers][b * n_out + actions[b]];
    const ErrorTerm term = error_term(td_targets[b], q, clip_td_error);
    loss += term.loss;
    ws.delta[b * n_out + actions[b]] = term.slope * inv_batch;
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    const LayerParams& layer = net.layers[l];
    LayerParams& g = grads.layers[l];
    const std::vector<double>& in = ws.acts[l];
    const auto& nz = ws.nonzero[l];
    const std::vector<double>& delta = ws.delta;
    const long rows = static_cast<long>(layer.rows);

    // Each gradient row is owned by one thread and summed over the batch in
    // sample order.
#pragma omp parallel for schedule(static)
    for (long j = 0; j < rows; ++j) {
      double* gw = g.weights.data() + j * layer.cols;
      std::fill(gw, gw + layer.cols, 0.0);
      double gb = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double d = delta[b * layer.rows + j];
        gb += d;
        if (d == 0.0) continue;
        const double* x = in.data() + b * layer.cols;
        for (std::uint32_t i : nz[b]) gw[i] += d * x[i];
      }
      g.biases[j] = gb;
    }
    if (l == 0) break;

    ws.prev_delta.assign(batch * layer.cols, 0.0);
    std::vector<double>& prev = ws.prev_delta;
    const long n_batch = static_cast<long>(batch);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < n_batch; ++b) {
      const double* x = in.data() + b * layer.cols;
      const double* d = delta.data() + b * layer.rows;
      double* p = prev.data() + b * layer.cols;
      for (std::uint32_t i : nz[b]) {
        if (!(x[i] > 0.0)) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < layer.rows; ++j) s += layer.weights[j * layer.cols + i] * d[j];
        p[i] = s;
      }
    }
    std::swap(ws.delta, ws.prev_delta);
  }
  return loss * inv_batch;
}

}  // namespace parallel

void batch_forward(const DenseNet& net, const InputBatch& inputs, Backend backend,
                   std::vector<double>& out) {
  if (backend == Backend::serial) {
    serial::batch_forward(net, inputs, out);
  } else {
    parallel::batch_forward(net, inputs, out);
  }
}

double batch_loss_grad(const DenseNet& net, const InputBatch& inputs,
                       std::span<const std::size_t> actions,
                       std::span<const double> td_targets, bool clip_td_error,
                       Backend backend, GradientSet& grads) {
  if (backend == Backend::serial) {
    return serial::batch_loss_grad(net, inputs, actions, td_targets, clip_td_error, grads);
  }
  return parallel::batch_loss_grad(net, inputs, actions, td_targets, clip_td_error, grads);
}

}  // namespace gdqn::kernels
