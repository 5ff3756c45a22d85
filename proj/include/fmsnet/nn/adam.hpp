#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fmsnet/nn/layers.hpp"
#include "fmsnet/nn/tensor.hpp"

namespace fmsnet::nn {

template <typename Scalar>
struct OptimizerState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::int64_t step = 0;
  std::vector<Vector<Scalar>> first_moment;
  std::vector<Vector<Scalar>> second_moment;
};

/// One bias-corrected Adam update: p -= lr * m_hat / (sqrt(v_hat) + eps).
///
/// Moments are allocated lazily on the first call. Throws NumericError naming the
/// first parameter whose gradient is not finite; nothing is modified in that case.
template <typename Scalar>
void adam_step(std::span<const Parameter<Scalar>> params, OptimizerState<Scalar>& state) {
  for (const auto& p : params) {
    if (p.grad->shape() != p.value->shape()) throw std::invalid_argument("gradient shape differs for " + p.name);
    if (!p.grad->all_finite()) throw NumericError("non-finite gradient in parameter " + p.name);
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Vector<Scalar>::Zero(p.value->size()));
      state.second_moment.push_back(Vector<Scalar>::Zero(p.value->size()));
    }
  }
  if (state.first_moment.size() != params.size()) throw std::invalid_argument("optimizer state does not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const Scalar b1(state.beta1), b2(state.beta2);
  const Scalar c1 = Scalar(1.0 - std::pow(state.beta1, t));
  const Scalar c2 = Scalar(1.0 - std::pow(state.beta2, t));
  const Scalar lr(state.learning_rate), eps(state.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = params[i].grad->values();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
    params[i].value->values().array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

}  // namespace fmsnet::nn
