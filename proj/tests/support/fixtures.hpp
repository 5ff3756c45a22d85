#pragma once

#include <cstdint>
#include <vector>

#include "fmsnet/nn/network.hpp"
#include "support/gradcheck.hpp"

namespace fmsnet::testing {

/// Small network with the full block grammar: conv -> pool -> dropout|batchnorm, masking, LSTM stack, dense head.
inline nn::Topology tiny_topology(std::uint64_t seed, nn::Regularization reg = nn::Regularization::dropout,
                                  int lstm_layers = 2, nn::Activation act = nn::Activation::elu, int branches = 1) {
  nn::Topology t;
  t.rows = 6 * branches;
  t.window_length = 8;
  t.max_windows = 3;
  for (int b = 0; b < branches; ++b) {
    nn::BranchSpec br{branches == 1 ? 0 : 6 * b, 6, {}};
    const nn::Index kh = branches == 1 ? 3 : 1;
    br.blocks.push_back({3, kh, 3, act, reg, 0.2});
    br.blocks.push_back({4, kh, 3, act, reg, 0.2});
    t.branches.push_back(br);
  }
  t.lstm_units.assign(lstm_layers, 5);
  t.dense_units = {6, 4};
  t.dense_activation = act;
  t.seed = seed;
  return t;
}

/// Random batch whose per-sample window counts are drawn in [1, max_windows].
inline nn::Batch<double> random_batch(const nn::Topology& t, nn::Index batch, nn::Index steps, nn::Rng& rng) {
  nn::Batch<double> b;
  b.windows = random_tensor({batch, steps, t.rows, t.window_length}, rng);
  b.mask = nn::MaskMatrix::Constant(batch, steps, false);
  for (nn::Index i = 0; i < batch; ++i) {
    const auto n = static_cast<nn::Index>(1 + rng.below(static_cast<std::uint64_t>(std::min(steps, t.max_windows))));
    for (nn::Index s = 0; s < steps; ++s) {
      if (s < n) {
        b.mask(i, s) = true;
      } else {
        for (nn::Index k = 0; k < t.rows * t.window_length; ++k) {
          b.windows.data()[(i * steps + s) * t.rows * t.window_length + k] = 0.0;
        }
      }
    }
    b.labels.push_back(static_cast<int>(rng.below(3)));
  }
  return b;
}

/// Finite-difference check of every parameter of `net` under the training-mode loss.
inline GradCheckResult check_network(nn::Network<double>& net, const nn::Batch<double>& batch, std::uint64_t step_seed,
                                     long max_entries_per_tensor = 0) {
  net.compute_gradients(batch, step_seed);
  std::vector<nn::Tensor<double>> grads;
  auto params = net.parameters();
  for (auto& p : params) grads.push_back(*p.grad);
  GradCheckResult result;
  auto loss = [&] { return static_cast<double>(net.loss(batch, nn::Mode::training, step_seed)); };
  for (std::size_t i = 0; i < params.size(); ++i) {
    check_tensor(*params[i].value, grads[i], loss, params[i].name, result, max_entries_per_tensor,
                 nn::mix_seed(step_seed, i));
  }
  return result;
}

}  // namespace fmsnet::testing
