#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmsnet/arch/model_config.hpp"
#include "fmsnet/harness/metrics.hpp"
#include "fmsnet/harness/prepare.hpp"
#include "fmsnet/nn/network.hpp"

namespace fmsnet::harness {

/// Epoch count and early stopping are not fixed by the method; these are the defaults.
struct TrainOptions {
  int epochs = 100;
  /// Epochs without a validation improvement before stopping; 0 disables early stopping.
  int patience = 15;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  /// When false, a non-finite loss ends training and keeps the best finite weights.
  bool abort_on_divergence = true;
  int eval_batch_size = 64;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  /// Macro F1 of the running training-mode predictions made during the epoch.
  double train_f1 = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  nn::Network<double> network;  // weights of the selected epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 1-based; 0 means the initial weights were kept
  bool stopped_early = false;
  bool diverged = false;
  std::string divergence;
};

/// Minibatch Adam on fold.train with a seeded shuffle per epoch.
///
/// After every epoch the validation set is scored in inference mode; the epoch with the
/// highest validation macro F1 (ties: lower validation loss) is retained. Without
/// validation samples the training F1 takes its place. Throws nn::NumericError naming
/// the epoch and batch on a non-finite loss unless abort_on_divergence is false.
TrainResult train(const arch::ModelConfig& config, const pipeline::SensorLayout& layout, const PreparedFold& fold,
                  const TrainOptions& options);

struct Predictions {
  std::vector<int> predicted;  // 0-based
  std::vector<int> truth;      // 0-based
  nn::RowMatrix<double> probabilities;
  double loss = 0.0;
};

Predictions predict(nn::Network<double>& network, const std::vector<pipeline::WindowedSample>& samples,
                    int batch_size = 64);

/// Inference-mode metrics on `samples`. Throws std::invalid_argument when empty.
MetricsReport evaluate(nn::Network<double>& network, const std::vector<pipeline::WindowedSample>& samples,
                       int batch_size = 64);

nlohmann::json to_json(const EpochRecord& record);

}  // namespace fmsnet::harness
