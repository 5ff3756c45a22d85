#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fmsnet/nn/activation.hpp"
#include "fmsnet/nn/network.hpp"

namespace fmsnet::arch {

enum class Variant { baseline, imu_centric, channel_centric };
enum class KernelScheme { inc_filters_fixed_kernel, inc_filters_dec_kernel };
using nn::Regularization;

inline constexpr double kDropoutRate = 0.2;
inline constexpr double kLearningRate = 1e-4;
inline constexpr int kClasses = 3;

/// Full hyperparameter assignment of one CNN-LSTM.
struct ModelConfig {
  Variant variant = Variant::baseline;
  int cnn_blocks = 2;
  KernelScheme scheme = KernelScheme::inc_filters_fixed_kernel;
  Regularization regularization = Regularization::dropout;
  int lstm_layers = 2;
  nn::Activation activation = nn::Activation::elu;
  int batch_size = 16;
  int windows = 10;
  int lstm_units = 256;
  /// Dense head widths; the last entry is the 3-way output.
  std::vector<int> dense_units{512, 128, 3};

  /// Throws std::invalid_argument when any field leaves its allowed range.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// batch 16, two blocks, increasing filters with fixed (5x5) kernels, dropout 0.2,
/// two LSTM layers, ELU.
ModelConfig best_config();

std::string to_string(Variant v);
std::string to_string(KernelScheme s);
std::string to_string(Regularization r);
Variant variant_from_string(std::string_view s);
KernelScheme scheme_from_string(std::string_view s);
Regularization regularization_from_string(std::string_view s);

nlohmann::json to_json(const ModelConfig& config);
/// Missing keys keep their defaults; unknown enum strings are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

/// One line "variant/blocks/scheme/reg/lstm/act/batch" used in tables and logs.
std::string describe(const ModelConfig& config);

}  // namespace fmsnet::arch
