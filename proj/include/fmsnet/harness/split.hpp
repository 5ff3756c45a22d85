#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmsnet/pipeline/types.hpp"

namespace fmsnet::harness {

/// One leave-one-subject-out fold. Indices refer to the sample list given to make_losocv.
struct Fold {
  std::string test_subject;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  /// Ratings (1..3) absent from train + validation; non-empty marks the fold.
  std::vector<int> missing_classes;
};

struct SplitPlan {
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
  bool stratified = true;
  double validation_fraction = 0.2;
};

/// Subject and rating (1..3) of one labeled repetition.
struct SampleKey {
  std::string subject;
  int label = 0;
};

struct SplitOptions {
  bool stratified = true;
  double validation_fraction = 0.2;
};

/// `folds` distinct test subjects drawn by a seeded shuffle of the sorted subject list.
///
/// The remaining subjects' samples are pooled and a validation share of
/// round(fraction * n) samples is held out. With stratification each class contributes
/// floor(fraction * n_c) samples and the leftover slots go to the largest remainders, so
/// every class sits within one sample of its exact share and the total does not depend
/// on the stratification switch. A fold whose training pool lacks a class is flagged and
/// a warning is emitted.
SplitPlan make_losocv(const std::vector<SampleKey>& samples, int folds, std::uint64_t seed,
                      const SplitOptions& options = {});

/// Sample keys of the labeled repetitions of a dataset, in order.
std::vector<SampleKey> sample_keys(const pipeline::Dataset& labeled);

nlohmann::json to_json(const SplitPlan& plan, const std::vector<std::string>& ids = {});

}  // namespace fmsnet::harness
