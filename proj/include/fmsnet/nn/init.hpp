#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "fmsnet/nn/random.hpp"
#include "fmsnet/nn/tensor.hpp"

namespace fmsnet::nn {

inline double glorot_bound(Index fan_in, Index fan_out) {
  if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("glorot init needs fan_in and fan_out >= 1");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

/// Uniform Glorot initialization in [-L, L], L = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
Tensor<Scalar> glorot_uniform_init(Index fan_in, Index fan_out, Shape shape, std::uint64_t seed) {
  const double bound = glorot_bound(fan_in, fan_out);
  Tensor<Scalar> out(std::move(shape));
  Rng rng(seed);
  for (Index i = 0; i < out.size(); ++i) out[i] = static_cast<Scalar>(bound * (2.0 * rng.uniform() - 1.0));
  return out;
}

}  // namespace fmsnet::nn
