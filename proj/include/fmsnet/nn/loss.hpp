#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "fmsnet/nn/tensor.hpp"

namespace fmsnet::nn {

template <typename Scalar>
struct CrossEntropyResult {
  Scalar loss = 0;            // mean over the batch
  RowMatrix<Scalar> probs;    // (batch, classes)
  RowMatrix<Scalar> dlogits;  // d(mean loss) / d(logits)
};

/// Softmax followed by categorical cross-entropy, averaged over rows.
/// `labels` holds zero-based class indices.
template <typename Scalar>
CrossEntropyResult<Scalar> softmax_crossentropy(const RowMatrix<Scalar>& logits, std::span<const int> labels) {
  if (!logits.allFinite()) throw NumericError("softmax_crossentropy received non-finite logits");
  if (static_cast<Index>(labels.size()) != logits.rows()) {
    throw std::invalid_argument("label count does not match the logit rows");
  }
  const Index b = logits.rows(), k = logits.cols();
  CrossEntropyResult<Scalar> out{Scalar(0), RowMatrix<Scalar>(b, k), RowMatrix<Scalar>(b, k)};
  for (Index i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= k) throw std::invalid_argument("label outside the class range");
    const Scalar m = logits.row(i).maxCoeff();
    auto e = (logits.row(i).array() - m).exp();
    const Scalar sum = e.sum();
    out.probs.row(i) = e / sum;
    Scalar loss;
    if (logits(i, y) == m) {
      // log1p keeps precision when the true class dominates.
      loss = std::log1p(sum - Scalar(1));
    } else {
      loss = m + std::log(sum) - logits(i, y);
    }
    out.loss += loss;
    out.dlogits.row(i) = out.probs.row(i);
    out.dlogits(i, y) -= Scalar(1);
  }
  out.loss /= Scalar(b);
  out.dlogits /= Scalar(b);
  return out;
}

template <typename Scalar>
RowMatrix<Scalar> softmax(const RowMatrix<Scalar>& logits) {
  RowMatrix<Scalar> probs(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    auto e = (logits.row(i).array() - logits.row(i).maxCoeff()).exp();
    probs.row(i) = e / e.sum();
  }
  return probs;
}

/// Single-sample form taking a one-hot label vector.
template <typename Scalar>
CrossEntropyResult<Scalar> softmax_crossentropy(const Vector<Scalar>& logits, const Vector<Scalar>& onehot) {
  if (onehot.size() != logits.size()) throw std::invalid_argument("one-hot label size differs from logit count");
  int label = -1;
  for (Index i = 0; i < onehot.size(); ++i) {
    if (onehot[i] == Scalar(1)) {
      if (label >= 0) throw std::invalid_argument("label is not one-hot");
      label = static_cast<int>(i);
    } else if (onehot[i] != Scalar(0)) {
      throw std::invalid_argument("label is not one-hot");
    }
  }
  if (label < 0) throw std::invalid_argument("label is not one-hot");
  RowMatrix<Scalar> row = logits.transpose();
  const int labels[] = {label};
  return softmax_crossentropy<Scalar>(row, labels);
}

}  // namespace fmsnet::nn
