#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fmsnet/arch/model_config.hpp"
#include "fmsnet/harness/experiment.hpp"

namespace fmsnet::sweep {

/// The six searched axes. Fields outside these axes come from a base configuration.
struct SearchSpace {
  std::vector<nn::Activation> activations{nn::Activation::relu, nn::Activation::elu, nn::Activation::lrelu};
  std::vector<int> cnn_blocks{1, 2, 3};
  std::vector<arch::KernelScheme> schemes{arch::KernelScheme::inc_filters_fixed_kernel,
                                          arch::KernelScheme::inc_filters_dec_kernel};
  std::vector<arch::Regularization> regularizations{arch::Regularization::dropout, arch::Regularization::batchnorm};
  std::vector<int> lstm_layers{1, 2};
  std::vector<int> batch_sizes{4, 8, 16, 32};

  /// Number of distinct combinations (288 for the default space).
  std::size_t size() const;
  /// Throws std::invalid_argument on an empty axis or a value the model cannot build.
  void validate() const;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

nlohmann::json to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const nlohmann::json& j);

/// `n` independent draws, uniform per axis; duplicates allowed. With `exhaustive` the full
/// grid is returned once in axis order (activation outermost) and `n` is ignored.
std::vector<arch::ModelConfig> sample_configs(const SearchSpace& space, std::size_t n, std::uint64_t seed,
                                              const arch::ModelConfig& base = {}, bool exhaustive = false);

struct SweepOptions {
  std::size_t n = 120;
  bool exhaustive = false;
  int folds = 5;
  int epochs = 15;
  int patience = 15;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  int workers = 1;
  bool stratified = true;
  /// Template for non-searched fields (variant, windows, LSTM width, dense head).
  arch::ModelConfig base{};
  /// Stop after this many newly scored configs; 0 runs to completion. Used to checkpoint long sweeps.
  std::size_t stop_after = 0;
};

nlohmann::json to_json(const SweepOptions& options);
SweepOptions sweep_options_from_json(const nlohmann::json& j);

struct SweepEntry {
  std::size_t index = 0;  // position in the sampled list
  arch::ModelConfig config;
  std::vector<double> train_f1, validation_f1, test_f1;  // per fold
  double train_mean = 0.0, validation_mean = 0.0, test_mean = 0.0;
  bool diverged = false;
  std::size_t rank = 0;  // 1-based
};

/// Sorts by mean validation macro F1, then mean training macro F1 (both descending), then
/// sample index, and assigns ranks. Test scores are never consulted.
void rank_entries(std::vector<SweepEntry>& entries);

SweepEntry entry_from_report(std::size_t index, const harness::ExperimentReport& report);

struct SweepResult {
  std::vector<SweepEntry> leaderboard;  // ranked entries completed so far
  std::size_t total = 0;                // configs in the sampled list
  bool complete() const { return leaderboard.size() == total; }
};

/// Scores every sampled config by k-fold LOSOCV on `labeled` (already restricted to the
/// searched exercise). All configs share the experiment seed, hence the same folds.
///
/// When `dir` is given, sweep.json is written first and leaderboard.csv is rewritten
/// atomically after each config. With `resume`, configs already in leaderboard.csv are
/// kept and only the rest are run; sweep.json must match the requested sweep.
SweepResult run_sweep(const pipeline::Dataset& labeled, const SearchSpace& space, const SweepOptions& options,
                      const std::optional<std::filesystem::path>& dir = std::nullopt, bool resume = false);

std::string leaderboard_csv(const std::vector<SweepEntry>& ranked);
/// Parses leaderboard.csv written by run_sweep. Throws pipeline::DataError when malformed.
std::vector<SweepEntry> read_leaderboard(const std::filesystem::path& path, const arch::ModelConfig& base = {});

/// Fixed-width text table of the top `limit` entries (0 = all).
std::string render_leaderboard(const std::vector<SweepEntry>& ranked, std::size_t limit = 0);

}  // namespace fmsnet::sweep
