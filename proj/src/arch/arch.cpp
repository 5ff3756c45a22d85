#include <stdexcept>

#include "fmsnet/arch/builder.hpp"
#include "fmsnet/arch/model_config.hpp"

namespace fmsnet::arch {

void ModelConfig::validate() const {
  if (cnn_blocks < 1 || cnn_blocks > 3) throw std::invalid_argument("cnn_blocks must be 1, 2 or 3");
  if (lstm_layers < 1 || lstm_layers > 2) throw std::invalid_argument("lstm_layers must be 1 or 2");
  if (batch_size != 4 && batch_size != 8 && batch_size != 16 && batch_size != 32) {
    throw std::invalid_argument("batch_size must be 4, 8, 16 or 32");
  }
  if (activation != nn::Activation::relu && activation != nn::Activation::elu && activation != nn::Activation::lrelu) {
    throw std::invalid_argument("activation must be relu, elu or lrelu");
  }
  if (windows < 1) throw std::invalid_argument("windows must be >= 1");
  if (lstm_units < 1) throw std::invalid_argument("lstm_units must be >= 1");
  if (dense_units.empty() || dense_units.back() != kClasses) {
    throw std::invalid_argument("dense head must end in 3 outputs");
  }
  for (int u : dense_units) {
    if (u < 1) throw std::invalid_argument("dense widths must be >= 1");
  }
}

ModelConfig best_config() {
  ModelConfig c;
  c.variant = Variant::baseline;
  c.batch_size = 16;
  c.cnn_blocks = 2;
  c.scheme = KernelScheme::inc_filters_fixed_kernel;
  c.regularization = Regularization::dropout;
  c.lstm_layers = 2;
  c.activation = nn::Activation::elu;
  return c;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::imu_centric: return "imu_centric";
    case Variant::channel_centric: return "channel_centric";
  }
  return "baseline";
}

std::string to_string(KernelScheme s) {
  return s == KernelScheme::inc_filters_fixed_kernel ? "inc_filters_fixed_kernel" : "inc_filters_dec_kernel";
}

std::string to_string(Regularization r) { return r == Regularization::dropout ? "dropout" : "batchnorm"; }

Variant variant_from_string(std::string_view s) {
  if (s == "baseline") return Variant::baseline;
  if (s == "imu_centric") return Variant::imu_centric;
  if (s == "channel_centric") return Variant::channel_centric;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

KernelScheme scheme_from_string(std::string_view s) {
  if (s == "inc_filters_fixed_kernel") return KernelScheme::inc_filters_fixed_kernel;
  if (s == "inc_filters_dec_kernel") return KernelScheme::inc_filters_dec_kernel;
  throw std::invalid_argument("unknown kernel scheme '" + std::string(s) + "'");
}

Regularization regularization_from_string(std::string_view s) {
  if (s == "dropout") return Regularization::dropout;
  if (s == "batchnorm") return Regularization::batchnorm;
  throw std::invalid_argument("unknown regularization '" + std::string(s) + "'");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"cnn_blocks", c.cnn_blocks},
          {"scheme", to_string(c.scheme)},
          {"regularization", to_string(c.regularization)},
          {"lstm_layers", c.lstm_layers},
          {"activation", nn::to_string(c.activation)},
          {"batch_size", c.batch_size},
          {"windows", c.windows},
          {"lstm_units", c.lstm_units},
          {"dense_units", c.dense_units}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("cnn_blocks")) c.cnn_blocks = j.at("cnn_blocks").get<int>();
  if (j.contains("scheme")) c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  if (j.contains("regularization")) {
    c.regularization = regularization_from_string(j.at("regularization").get<std::string>());
  }
  if (j.contains("lstm_layers")) c.lstm_layers = j.at("lstm_layers").get<int>();
  if (j.contains("activation")) c.activation = nn::activation_from_string(j.at("activation").get<std::string>());
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("windows")) c.windows = j.at("windows").get<int>();
  if (j.contains("lstm_units")) c.lstm_units = j.at("lstm_units").get<int>();
  if (j.contains("dense_units")) c.dense_units = j.at("dense_units").get<std::vector<int>>();
  c.validate();
  return c;
}

std::string describe(const ModelConfig& c) {
  return to_string(c.variant) + "/" + std::to_string(c.cnn_blocks) + "blk/" +
         (c.scheme == KernelScheme::inc_filters_fixed_kernel ? "fixed" : "dec") + "/" + to_string(c.regularization) +
         "/" + std::to_string(c.lstm_layers) + "lstm/" + nn::to_string(c.activation) + "/b" +
         std::to_string(c.batch_size);
}

std::vector<BlockPlan> block_plan(const ModelConfig& config) {
  config.validate();
  static constexpr nn::Index kFilters[] = {16, 32, 64};
  static constexpr nn::Index kDecreasing[] = {9, 5, 3};
  std::vector<BlockPlan> plan;
  for (int b = 0; b < config.cnn_blocks; ++b) {
    if (config.variant != Variant::baseline) {
      plan.push_back({kFilters[b], 1, 5});
    } else if (config.scheme == KernelScheme::inc_filters_fixed_kernel) {
      plan.push_back({kFilters[b], 5, 5});
    } else {
      plan.push_back({kFilters[b], kDecreasing[b], kDecreasing[b]});
    }
  }
  return plan;
}

nn::Topology make_topology(const ModelConfig& config, const pipeline::SensorLayout& layout, nn::Index window_length,
                           std::uint64_t seed) {
  config.validate();
  if (layout.imu_ids.empty()) throw std::invalid_argument("sensor layout has no IMUs");
  std::vector<nn::ConvBlockSpec> blocks;
  for (const auto& p : block_plan(config)) {
    blocks.push_back({p.filters, p.kernel_h, p.kernel_w, config.activation, config.regularization, kDropoutRate});
  }
  nn::Topology t;
  t.rows = layout.rows();
  t.window_length = window_length;
  t.max_windows = config.windows;
  if (config.variant == Variant::imu_centric) {
    for (std::size_t i = 0; i < layout.imu_ids.size(); ++i) {
      t.branches.push_back({layout.row_of(i, pipeline::Channel::acc_x), pipeline::kChannelsPerImu, blocks});
    }
  } else {
    t.branches.push_back({0, layout.rows(), blocks});
  }
  t.lstm_units.assign(config.lstm_layers, config.lstm_units);
  t.dense_units.assign(config.dense_units.begin(), config.dense_units.end() - 1);
  t.dense_activation = config.activation;
  t.classes = kClasses;
  t.seed = seed;
  t.validate();
  return t;
}

}  // namespace fmsnet::arch
