#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fmsnet/arch/model_config.hpp"
#include "fmsnet/harness/metrics.hpp"
#include "fmsnet/harness/prepare.hpp"
#include "fmsnet/harness/split.hpp"
#include "fmsnet/harness/trainer.hpp"

namespace fmsnet::harness {

/// DS, TSP, HS-left, HS-right, HS-combined, IL-left, IL-right, IL-combined.
inline constexpr std::string_view kSelections[] = {"DS",     "TSP",         "HS-left", "HS-right",
                                                   "HS-combined", "IL-left", "IL-right", "IL-combined"};

/// Labeled repetitions matching `selection`. Throws std::invalid_argument on an unknown or empty selection.
pipeline::Dataset select_repetitions(const pipeline::Dataset& labeled, std::string_view selection);

struct ExperimentOptions {
  int folds = 5;
  int epochs = 100;
  int patience = 15;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  int workers = 1;
  bool stratified = true;
  bool abort_on_divergence = true;
};

struct FoldResult {
  int fold = 0;
  std::string test_subject;
  MetricsReport train, validation, test;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool stopped_early = false;
  bool diverged = false;
  std::string divergence;
  std::vector<int> missing_classes;
  /// Repetition ids that entered the scaler fit.
  std::vector<std::string> scaler_ids;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation; 0 for a single fold
};

MeanStd mean_std(const std::vector<double>& values);

struct ExperimentReport {
  std::string selection;
  arch::ModelConfig config;
  ExperimentOptions options;
  SplitPlan plan;
  std::vector<std::string> ids;  // repetition ids, indexed like the split plan
  std::vector<FoldResult> folds;
  MeanStd train_f1, validation_f1, test_f1;
  bool diverged = false;
};

/// Called after each fold finishes (from the worker thread, serialized).
using FoldCallback = std::function<void(const FoldResult&)>;

/// k-fold LOSOCV of `config` on an already selected labeled dataset.
///
/// Fold f trains with seed mix_seed(seed, f + 1); folds run on `workers` threads and the
/// report does not depend on the worker count. Validation macro F1 selects each fold's epoch;
/// the reported train, validation and test scores are inference-mode evaluations of that epoch.
ExperimentReport run_experiment(const pipeline::Dataset& selected, const arch::ModelConfig& config,
                                const ExperimentOptions& options, std::string selection = "",
                                const FoldCallback& on_fold = {});

/// select_repetitions + run_experiment.
ExperimentReport run_selection(const pipeline::Dataset& labeled, std::string_view selection,
                               const arch::ModelConfig& config, const ExperimentOptions& options);

nlohmann::json to_json(const FoldResult& fold);
nlohmann::json to_json(const ExperimentOptions& options);
ExperimentOptions experiment_options_from_json(const nlohmann::json& j);
/// Summary and per-fold metrics (without per-epoch history).
nlohmann::json to_json(const ExperimentReport& report);

}  // namespace fmsnet::harness
