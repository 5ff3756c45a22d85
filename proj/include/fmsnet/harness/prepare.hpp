#pragma once

#include <string>
#include <vector>

#include "fmsnet/harness/split.hpp"
#include "fmsnet/nn/network.hpp"
#include "fmsnet/pipeline/preprocess.hpp"

namespace fmsnet::harness {

/// Labeled repetitions after segment alignment, in dataset order.
struct PreparedDataset {
  pipeline::SensorLayout layout;
  pipeline::Index max_length = 0;
  std::vector<pipeline::Repetition> repetitions;

  std::vector<std::string> ids() const;
};

/// Applies the dataset's alignment (when present) and checks that every repetition is labeled.
PreparedDataset prepare_dataset(const pipeline::Dataset& labeled);

/// Model-ready samples of one fold. The scaler is fitted on the training indices only.
struct PreparedFold {
  pipeline::ScalerParams scaler;
  std::vector<std::string> scaler_ids;
  pipeline::Index max_length = 0;
  std::vector<pipeline::WindowedSample> train, validation, test;
  std::vector<std::string> train_ids, validation_ids, test_ids;
};

/// max_length is the dataset's, rounded up to a multiple of `windows`.
PreparedFold prepare_fold(const PreparedDataset& data, const Fold& fold, pipeline::Index windows);

/// Stacks samples[indices] into a batch; labels become 0-based class ids.
nn::Batch<double> make_batch(const std::vector<pipeline::WindowedSample>& samples,
                             const std::vector<std::size_t>& indices);
nn::Batch<double> make_batch(const std::vector<pipeline::WindowedSample>& samples, std::size_t begin,
                             std::size_t end);

}  // namespace fmsnet::harness
