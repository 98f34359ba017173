#include <gtest/gtest.h>

#include "gdqn/error.hpp"
#include "gdqn/kernels.hpp"
#include "gdqn/nn.hpp"
#include "oracles.hpp"

using namespace gdqn;

namespace {

// Sparse rows like the environments produce: mostly zeros, a few 0.5 / 1.0.
InputBatch sparse_batch(std::size_t n, std::size_t width, Rng& rng) {
  InputBatch b(n, width);
  for (auto& v : b.data) {
    const auto r = rng.uniform_index(10);
    v = r == 0 ? 1.0 : r == 1 ? 0.5 : 0.0;
  }
  return b;
}

}  // namespace

TEST(Kernels, ForwardBackendsAgreeBitwise) {
  Rng rng(21);
  for (std::size_t width : {8u, 50u, 800u}) {
    const auto dims = default_layer_dims(width, 3);
    DenseNet net = init_net(dims, rng);
    for (std::size_t n : {1u, 7u, 32u}) {
      const InputBatch in = sparse_batch(n, width, rng);
      std::vector<double> a, b;
      kernels::serial::batch_forward(net, in, a);
      kernels::parallel::batch_forward(net, in, b);
      EXPECT_EQ(a, b);
      for (std::size_t i = 0; i < n; ++i) {
        const auto want = oracle::forward(net, in.row(i));
        for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(a[i * 3 + k], want[k], 1e-12);
      }
    }
  }
}

TEST(Kernels, GradientBackendsAgreeBitwise) {
  Rng rng(22);
  for (bool clip : {false, true}) {
    for (std::size_t width : {8u, 200u}) {
      const auto dims = default_layer_dims(width, 4);
      DenseNet net = init_net(dims, rng);
      const std::size_t n = 32;
      const InputBatch in = sparse_batch(n, width, rng);
      std::vector<std::size_t> actions(n);
      std::vector<double> targets(n);
      for (std::size_t b = 0; b < n; ++b) {
        actions[b] = rng.uniform_index(4);
        targets[b] = rng.uniform(-3.0, 3.0);
      }
      GradientSet ga = zero_gradients_like(net), gb = zero_gradients_like(net);
      const double la = kernels::serial::batch_loss_grad(net, in, actions, targets, clip, ga);
      const double lb = kernels::parallel::batch_loss_grad(net, in, actions, targets, clip, gb);
      EXPECT_EQ(la, lb);
      EXPECT_EQ(ga, gb);
    }
  }
}

TEST(Kernels, DispatchMatchesNamedBackends) {
  Rng rng(23);
  const auto dims = default_layer_dims(30, 3);
  DenseNet net = init_net(dims, rng);
  const InputBatch in = sparse_batch(5, 30, rng);
  std::vector<double> a, b;
  kernels::batch_forward(net, in, Backend::serial, a);
  kernels::serial::batch_forward(net, in, b);
  EXPECT_EQ(a, b);
  EXPECT_GE(kernels::max_threads(), 1);
}

TEST(Kernels, Preconditions) {
  Rng rng(24);
  const auto dims = default_layer_dims(4, 2);
  DenseNet net = init_net(dims, rng);
  std::vector<double> out;
  kernels::parallel::batch_forward(net, InputBatch(0, 4), out);
  EXPECT_TRUE(out.empty());
  EXPECT_THROW(kernels::serial::batch_forward(net, InputBatch(2, 3), out), ShapeError);
}
