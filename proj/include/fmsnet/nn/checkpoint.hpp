#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "fmsnet/nn/adam.hpp"
#include "fmsnet/nn/network.hpp"
#include "fmsnet/nn/random.hpp"

namespace fmsnet::nn {

/// Checkpoint container, version 1.
///
///   bytes 0..7   magic "FMSNETCK"
///   u32 LE       format version
///   u64 LE       header length in bytes
///   header       UTF-8 JSON: topology, layer specs, tensor table, optimizer
///                hyperparameters and step, RNG state, caller metadata
///   payload      float64 LE arrays in tensor-table order
///
/// Tensor table entries carry {name, shape, role} with role one of
/// parameter | state | adam_m | adam_v.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Scalar>
struct LoadedCheckpoint {
  Network<Scalar> network;
  OptimizerState<Scalar> optimizer;
  std::optional<std::string> rng_state;
  nlohmann::json metadata;
};

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, Network<Scalar>& network,
                     const OptimizerState<Scalar>* optimizer = nullptr, const Rng* rng = nullptr,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Throws std::runtime_error on a bad magic, unknown version or truncated payload.
template <typename Scalar>
LoadedCheckpoint<Scalar> load_checkpoint(const std::filesystem::path& path);

/// Restores a serialized std::mt19937_64 state into rng.
void restore_rng(Rng& rng, const std::string& state);

extern template void save_checkpoint<double>(const std::filesystem::path&, Network<double>&,
                                             const OptimizerState<double>*, const Rng*, const nlohmann::json&);
extern template void save_checkpoint<float>(const std::filesystem::path&, Network<float>&,
                                            const OptimizerState<float>*, const Rng*, const nlohmann::json&);
extern template LoadedCheckpoint<double> load_checkpoint<double>(const std::filesystem::path&);
extern template LoadedCheckpoint<float> load_checkpoint<float>(const std::filesystem::path&);

}  // namespace fmsnet::nn
