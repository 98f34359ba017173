#pragma once

// Batched forward and loss-gradient kernels.
//
// `serial` is the textbook per-sample implementation and is kept as the
// reference. `parallel` processes a whole layer for the batch at once,
// skips zero inputs (observations here are sparse rasters and one-hot
// codes) and splits work with OpenMP. Every output element is accumulated
// in the same order in both paths, so they agree bit for bit regardless of
// the thread count.

#include <span>
#include <vector>

#include "gdqn/nn.hpp"

namespace gdqn::kernels {

// Q-values for each batch row, row-major batch x outputs.
void batch_forward(const DenseNet& net, const InputBatch& inputs, Backend backend,
                   std::vector<double>& out);

// Writes into `grads` (which must be shape-congruent with `net`) and returns
// the mean loss.
double batch_loss_grad(const DenseNet& net, const InputBatch& inputs,
                       std::span<const std::size_t> actions,
                       std::span<const double> td_targets, bool clip_td_error,
                       Backend backend, GradientSet& grads);

namespace serial {
void batch_forward(const DenseNet& net, const InputBatch& inputs, std::vector<double>& out);
double batch_loss_grad(const DenseNet& net, const InputBatch& inputs,
                       std::span<const std::size_t> actions,
                       std::span<const double> td_targets, bool clip_td_error,
                       GradientSet& grads);
}  // namespace serial

namespace parallel {
void batch_forward(const DenseNet& net, const InputBatch& inputs, std::vector<double>& out);
double batch_loss_grad(const DenseNet& net, const InputBatch& inputs,
                       std::span<const std::size_t> actions,
                       std::span<const double> td_targets, bool clip_td_error,
                       GradientSet& grads);
}  // namespace parallel

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace gdqn::kernels
