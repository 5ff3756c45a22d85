#include "fmsnet/harness/metrics.hpp"

#include <stdexcept>
#include <string>

namespace fmsnet::harness {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("truth and prediction counts differ");
  if (truth.empty()) throw std::invalid_argument("cannot evaluate an empty set");
  ConfusionMatrix c = ConfusionMatrix::Zero();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= kClasses || predicted[i] < 0 || predicted[i] >= kClasses) {
      throw std::invalid_argument("class id outside [0, 3) at position " + std::to_string(i));
    }
    ++c(truth[i], predicted[i]);
  }
  return c;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion) {
  MetricsReport r;
  r.confusion = confusion;
  const auto total = static_cast<double>(confusion.sum());
  for (int k = 0; k < kClasses; ++k) {
    const auto tp = static_cast<double>(confusion(k, k));
    const auto predicted = static_cast<double>(confusion.col(k).sum());
    r.support[k] = confusion.row(k).sum();
    r.precision[k] = ratio(tp, predicted);
    r.recall[k] = ratio(tp, static_cast<double>(r.support[k]));
    r.f1[k] = ratio(2.0 * r.precision[k] * r.recall[k], r.precision[k] + r.recall[k]);
  }
  r.macro_f1 = (r.f1[0] + r.f1[1] + r.f1[2]) / kClasses;
  r.accuracy = ratio(static_cast<double>(confusion.trace()), total);
  return r;
}

double macro_f1(const ConfusionMatrix& confusion) { return metrics_from_confusion(confusion).macro_f1; }

MetricsReport evaluate_predictions(std::span<const int> truth, std::span<const int> predicted) {
  return metrics_from_confusion(confusion_matrix(truth, predicted));
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json confusion = nlohmann::json::array();
  for (int i = 0; i < kClasses; ++i) {
    confusion.push_back({r.confusion(i, 0), r.confusion(i, 1), r.confusion(i, 2)});
  }
  return {{"confusion", confusion}, {"precision", r.precision}, {"recall", r.recall},
          {"f1", r.f1},             {"support", r.support},     {"macro_f1", r.macro_f1},
          {"accuracy", r.accuracy}, {"loss", r.loss},           {"loss_curve", r.loss_curve}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  for (int i = 0; i < kClasses; ++i) {
    for (int k = 0; k < kClasses; ++k) r.confusion(i, k) = j.at("confusion").at(i).at(k).get<Index>();
  }
  r.precision = j.at("precision").get<std::array<double, kClasses>>();
  r.recall = j.at("recall").get<std::array<double, kClasses>>();
  r.f1 = j.at("f1").get<std::array<double, kClasses>>();
  r.support = j.at("support").get<std::array<Index, kClasses>>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.accuracy = j.value("accuracy", 0.0);
  r.loss = j.value("loss", 0.0);
  r.loss_curve = j.value("loss_curve", std::vector<double>{});
  return r;
}

}  // namespace fmsnet::harness
