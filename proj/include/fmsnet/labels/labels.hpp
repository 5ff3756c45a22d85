#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fmsnet/labels/rating.hpp"
#include "fmsnet/pipeline/types.hpp"

namespace fmsnet::labels {

using Index = Eigen::Index;

// --- majority vote ----------------------------------------------------------

enum class Agreement { unambiguous, majority_minor, majority_major, no_majority };

inline constexpr std::array<Agreement, 4> kAgreements{Agreement::unambiguous, Agreement::majority_minor,
                                                      Agreement::majority_major, Agreement::no_majority};

std::string to_string(Agreement a);

struct AgreementResult {
  std::optional<int> final_label;
  Agreement category = Agreement::no_majority;

  friend bool operator==(const AgreementResult&, const AgreementResult&) = default;
};

/// Majority vote over rater scores in {1,2,3}.
///
/// All equal -> unambiguous. A strict majority exists and every dissenting score is one
/// point away -> majority_minor, otherwise majority_major. No strict majority -> no_majority
/// with no label. Three scores is the expected case; other counts follow the same rules.
AgreementResult aggregate(std::span<const int> scores);
inline AgreementResult aggregate(int a, int b, int c) {
  const int s[] = {a, b, c};
  return aggregate(s);
}

// --- Krippendorff's alpha ---------------------------------------------------

enum class DistanceMetric { nominal, ordinal };

struct AlphaResult {
  double alpha = 1.0;
  double observed_disagreement = 0.0;
  double expected_disagreement = 0.0;
  /// Number of pairable values n (values in units with >= 2 ratings).
  double pairable_values = 0.0;
  std::vector<int> values;         // sorted distinct values
  Eigen::MatrixXd coincidences;    // o_ck over `values`
};

/// Coincidence-matrix alpha = 1 - D_o / D_e. Units with a single rating are ignored.
/// Throws std::invalid_argument with fewer than 2 pairable units or a rater rating a unit twice.
/// When D_e = 0 (one value overall) returns alpha = 1 and warns.
AlphaResult krippendorff_alpha_detail(std::span<const RatingRecord> records,
                                      DistanceMetric metric = DistanceMetric::ordinal);
double krippendorff_alpha(std::span<const RatingRecord> records, DistanceMetric metric = DistanceMetric::ordinal);

// --- labeled dataset --------------------------------------------------------

struct LabeledDataset {
  pipeline::Dataset dataset;  // retained repetitions, final_label set
  std::vector<std::string> excluded_no_majority;
  std::vector<std::string> excluded_unrated;
  std::map<Agreement, Index> category_counts;
  /// Keyed by exercise ("DS", "TSP") or exercise-side ("HS-left"); counts of labels 1, 2, 3.
  std::map<std::string, std::array<Index, 3>> label_histograms;
};

/// Applies majority vote to every repetition. Ratings come from `records`.
LabeledDataset build_labeled_dataset(const pipeline::Dataset& dataset, std::span<const RatingRecord> records);

std::string histogram_key(pipeline::Exercise exercise, pipeline::Side side);

}  // namespace fmsnet::labels
