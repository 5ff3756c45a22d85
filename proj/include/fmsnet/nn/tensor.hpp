#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmsnet::nn {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Row-major boolean matrix, one row per batch entry. Used for window masks.
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape);

/// Dense N-d array in row-major order backed by an Eigen vector.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(std::move(shape)), values_(Vector<Scalar>::Constant(shape_size(shape_), fill)) {}
  Tensor(Shape shape, Vector<Scalar> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_)) {
      throw std::invalid_argument("tensor value count " + std::to_string(values_.size()) +
                                  " does not match shape " + shape_to_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(std::size_t axis) const { return shape_.at(axis); }
  Index size() const { return values_.size(); }

  Vector<Scalar>& values() { return values_; }
  const Vector<Scalar>& values() const { return values_; }
  Scalar* data() { return values_.data(); }
  const Scalar* data() const { return values_.data(); }

  Scalar& operator[](Index i) { return values_[i]; }
  Scalar operator[](Index i) const { return values_[i]; }

  template <typename... I>
  Scalar& operator()(I... idx) {
    return values_[offset({static_cast<Index>(idx)...})];
  }
  template <typename... I>
  Scalar operator()(I... idx) const {
    return values_[offset({static_cast<Index>(idx)...})];
  }

  /// View as (rows x cols); rows * cols must equal size().
  Eigen::Map<RowMatrix<Scalar>> matrix(Index rows, Index cols) {
    check_view(rows, cols);
    return {values_.data(), rows, cols};
  }
  Eigen::Map<const RowMatrix<Scalar>> matrix(Index rows, Index cols) const {
    check_view(rows, cols);
    return {values_.data(), rows, cols};
  }
  /// View as (leading dim) x (product of the remaining dims).
  Eigen::Map<RowMatrix<Scalar>> matrix() { return matrix(shape_.at(0), size() / std::max<Index>(shape_.at(0), 1)); }
  Eigen::Map<const RowMatrix<Scalar>> matrix() const {
    return matrix(shape_.at(0), size() / std::max<Index>(shape_.at(0), 1));
  }

  void reshape(Shape shape) {
    if (shape_size(shape) != size()) {
      throw std::invalid_argument("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    shape_ = std::move(shape);
  }
  void set_zero() { values_.setZero(); }
  bool all_finite() const { return values_.allFinite(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, values_.template cast<Other>());
  }

 private:
  Index offset(std::initializer_list<Index> idx) const {
    Index off = 0;
    std::size_t axis = 0;
    for (Index i : idx) off = off * shape_[axis++] + i;
    return off;
  }
  void check_view(Index rows, Index cols) const {
    if (rows * cols != size()) {
      throw std::invalid_argument("matrix view " + std::to_string(rows) + "x" + std::to_string(cols) +
                                  " does not cover tensor " + shape_to_string(shape_));
    }
  }

  Shape shape_;
  Vector<Scalar> values_;
};

/// Raised when a forward/backward pass produces or receives non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fmsnet::nn
