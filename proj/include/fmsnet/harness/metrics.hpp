#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace fmsnet::harness {

using Index = Eigen::Index;
inline constexpr int kClasses = 3;

/// Rows are true classes, columns predicted classes; class ids are 0-based (rating - 1).
using ConfusionMatrix = Eigen::Matrix<Index, kClasses, kClasses>;

struct MetricsReport {
  ConfusionMatrix confusion = ConfusionMatrix::Zero();
  std::array<double, kClasses> precision{};
  std::array<double, kClasses> recall{};
  std::array<double, kClasses> f1{};
  std::array<Index, kClasses> support{};
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<double> loss_curve;
};

/// Throws std::invalid_argument on length mismatch, an empty set or a class id outside [0, 3).
ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted);

/// Per-class precision, recall and F1. Any zero denominator yields 0 for that quantity.
MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion);

/// Arithmetic mean of the three per-class F1 scores.
double macro_f1(const ConfusionMatrix& confusion);

MetricsReport evaluate_predictions(std::span<const int> truth, std::span<const int> predicted);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

}  // namespace fmsnet::harness
