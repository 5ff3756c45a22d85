#pragma once

#include <string>
#include <string_view>

#include "fmsnet/nn/tensor.hpp"

namespace fmsnet::nn {

enum class Activation { linear, relu, elu, lrelu, tanh, sigmoid };

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kEluAlpha = 1.0;

std::string to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Elementwise activation of a pre-activation expression.
template <typename Derived>
auto activate(Activation a, const Eigen::ArrayBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  using Array = Eigen::Array<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime,
                             Derived::IsRowMajor ? Eigen::RowMajor : Eigen::ColMajor>;
  const Scalar zero(0);
  switch (a) {
    case Activation::linear:
      return Array(z);
    case Activation::relu:
      return Array(z.max(zero));
    case Activation::elu:
      return Array((z > zero).select(z, Scalar(kEluAlpha) * (z.exp() - Scalar(1))));
    case Activation::lrelu:
      return Array((z > zero).select(z, Scalar(kLeakySlope) * z));
    case Activation::tanh:
      return Array(z.tanh());
    case Activation::sigmoid:
      return Array(Scalar(1) / (Scalar(1) + (-z).exp()));
  }
  return Array(z);
}

/// Derivative of the activation evaluated at the pre-activation z.
template <typename Derived>
auto activation_derivative(Activation a, const Eigen::ArrayBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  using Array = Eigen::Array<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime,
                             Derived::IsRowMajor ? Eigen::RowMajor : Eigen::ColMajor>;
  const Scalar zero(0), one(1);
  switch (a) {
    case Activation::linear:
      return Array(Array::Ones(z.rows(), z.cols()));
    case Activation::relu:
      return Array((z > zero).select(one, Array::Zero(z.rows(), z.cols())));
    case Activation::elu:
      return Array((z > zero).select(one, Scalar(kEluAlpha) * z.exp()));
    case Activation::lrelu:
      return Array((z > zero).select(one, Array::Constant(z.rows(), z.cols(), Scalar(kLeakySlope))));
    case Activation::tanh: {
      Array t = z.tanh();
      return Array(one - t * t);
    }
    case Activation::sigmoid: {
      Array s = one / (one + (-z).exp());
      return Array(s * (one - s));
    }
  }
  return Array(Array::Ones(z.rows(), z.cols()));
}

}  // namespace fmsnet::nn
