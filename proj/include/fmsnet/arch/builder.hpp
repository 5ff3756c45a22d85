#pragma once

#include <cstdint>
#include <vector>

#include "fmsnet/arch/model_config.hpp"
#include "fmsnet/nn/network.hpp"
#include "fmsnet/pipeline/types.hpp"

namespace fmsnet::arch {

struct BlockPlan {
  nn::Index filters;
  nn::Index kernel_h;
  nn::Index kernel_w;

  friend bool operator==(const BlockPlan&, const BlockPlan&) = default;
};

/// Per-block filters and kernels.
///
///   fixed scheme      filters 16, 32, 64 with (5x5) kernels
///   decreasing scheme filters 16, 32, 64 with (9x9), (5x5), (3x3)
///   imu_centric and channel_centric force every kernel to (1x5)
std::vector<BlockPlan> block_plan(const ModelConfig& config);

/// Topology for `config` over windows of (layout.rows() x window_length).
nn::Topology make_topology(const ModelConfig& config, const pipeline::SensorLayout& layout,
                           nn::Index window_length, std::uint64_t seed);

template <typename Scalar>
nn::Network<Scalar> build_model(const ModelConfig& config, const pipeline::SensorLayout& layout,
                                nn::Index window_length, std::uint64_t seed) {
  return nn::Network<Scalar>(make_topology(config, layout, window_length, seed));
}

/// Class probabilities (B, 3) in inference mode.
template <typename Scalar>
nn::RowMatrix<Scalar> forward_classify(nn::Network<Scalar>& network, const nn::Batch<Scalar>& batch) {
  return network.predict_proba(batch);
}

}  // namespace fmsnet::arch
