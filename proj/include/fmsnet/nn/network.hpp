#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmsnet/nn/layers.hpp"
#include "fmsnet/nn/loss.hpp"

namespace fmsnet::nn {

enum class Regularization { dropout, batchnorm };

struct ConvBlockSpec {
  Index filters = 16;
  Index kernel_h = 5;
  Index kernel_w = 5;
  Activation activation = Activation::elu;
  Regularization regularization = Regularization::dropout;
  double dropout_rate = 0.2;

  friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

/// A CNN stack applied to the input rows [row_begin, row_begin + row_count) of every window.
struct BranchSpec {
  Index row_begin = 0;
  Index row_count = 0;
  std::vector<ConvBlockSpec> blocks;

  friend bool operator==(const BranchSpec&, const BranchSpec&) = default;
};

/// Time-distributed CNN branches -> masking -> LSTM stack -> dense head.
struct Topology {
  Index rows = 0;
  Index window_length = 0;
  /// Windows at index >= max_windows must be masked.
  Index max_windows = 0;
  std::vector<BranchSpec> branches;
  std::vector<Index> lstm_units;
  std::vector<Index> dense_units;
  Activation dense_activation = Activation::elu;
  Index classes = 3;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a branch leaves the input or a spatial dim collapses to 0.
  void validate() const;
  /// Flattened CNN feature width of one window for branch k.
  Shape branch_output_shape(std::size_t k) const;
  Index feature_width() const;
  std::vector<LayerSpec> layer_specs() const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

nlohmann::json to_json(const Topology& topology);
Topology topology_from_json(const nlohmann::json& j);

enum class Mode { training, inference };

/// Model input: windows (B, X, rows, window_length), mask (B, X) and optional labels.
template <typename Scalar>
struct Batch {
  Tensor<Scalar> windows;
  MaskMatrix mask;
  std::vector<int> labels;  // zero-based class ids
};

template <typename Scalar>
class Network {
 public:
  explicit Network(Topology topology);

  const Topology& topology() const { return topology_; }

  /// Logits (B, classes). Caches activations for a following backward().
  RowMatrix<Scalar> forward(const Batch<Scalar>& batch, Mode mode, std::uint64_t step_seed = 0);
  /// Accumulates parameter gradients given d(loss)/d(logits).
  void backward(const RowMatrix<Scalar>& dlogits);

  RowMatrix<Scalar> predict_proba(const Batch<Scalar>& batch) { return softmax(forward(batch, Mode::inference)); }
  Scalar loss(const Batch<Scalar>& batch, Mode mode, std::uint64_t step_seed = 0) {
    return softmax_crossentropy<Scalar>(forward(batch, mode, step_seed), batch.labels).loss;
  }
  /// zero_grad + training forward + loss + backward.
  CrossEntropyResult<Scalar> compute_gradients(const Batch<Scalar>& batch, std::uint64_t step_seed);

  std::vector<Parameter<Scalar>> parameters();
  /// Non-trainable tensors that still belong to the model state (batchnorm running statistics).
  std::vector<std::pair<std::string, Tensor<Scalar>*>> state_tensors();
  void zero_grad();
  Index trainable_parameter_count();

 private:
  struct Block {
    Conv2d<Scalar> conv;
    MaxPool2d<Scalar> pool;
    std::optional<Dropout<Scalar>> dropout;
    std::optional<BatchNorm<Scalar>> batchnorm;
  };
  struct Branch {
    BranchSpec spec;
    std::vector<Block> blocks;
    Shape output_shape;  // (N, H, W, C) of the last forward
    Index width = 0;
  };

  void check_batch(const Batch<Scalar>& batch) const;

  Topology topology_;
  std::vector<Branch> branches_;
  std::vector<Lstm<Scalar>> lstms_;
  std::vector<Dense<Scalar>> dense_;
  SequenceLayout layout_;
};

extern template class Network<double>;
extern template class Network<float>;

}  // namespace fmsnet::nn
