#include "fmsnet/labels/labels.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "fmsnet/log.hpp"

namespace fmsnet::labels {

std::string to_string(Agreement a) {
  switch (a) {
    case Agreement::unambiguous: return "unambiguous";
    case Agreement::majority_minor: return "majority_minor";
    case Agreement::majority_major: return "majority_major";
    case Agreement::no_majority: return "no_majority";
  }
  return "no_majority";
}

AgreementResult aggregate(std::span<const int> scores) {
  if (scores.empty()) throw std::invalid_argument("aggregate needs at least one score");
  std::array<int, 3> counts{};
  for (int s : scores) {
    if (s < 1 || s > 3) throw std::invalid_argument("score " + std::to_string(s) + " is outside {1,2,3}");
    ++counts[s - 1];
  }
  const int n = static_cast<int>(scores.size());
  for (int v = 1; v <= 3; ++v) {
    if (2 * counts[v - 1] <= n) continue;
    if (counts[v - 1] == n) return {v, Agreement::unambiguous};
    int worst = 0;
    for (int s : scores) worst = std::max(worst, std::abs(s - v));
    return {v, worst == 1 ? Agreement::majority_minor : Agreement::majority_major};
  }
  return {std::nullopt, Agreement::no_majority};
}

AlphaResult krippendorff_alpha_detail(std::span<const RatingRecord> records, DistanceMetric metric) {
  std::map<std::string, std::vector<int>> units;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.insert({r.repetition_id, r.rater_id}).second) {
      throw std::invalid_argument("rater " + r.rater_id + " rated " + r.repetition_id + " more than once");
    }
    units[r.repetition_id].push_back(r.score);
  }
  std::set<int> value_set;
  Index pairable_units = 0;
  for (const auto& [id, vals] : units) {
    if (vals.size() < 2) continue;
    ++pairable_units;
    value_set.insert(vals.begin(), vals.end());
  }
  if (pairable_units < 2) throw std::invalid_argument("krippendorff_alpha needs at least 2 units with >= 2 ratings");

  AlphaResult out;
  out.values.assign(value_set.begin(), value_set.end());
  const Index v = static_cast<Index>(out.values.size());
  auto index_of = [&](int value) {
    return static_cast<Index>(std::lower_bound(out.values.begin(), out.values.end(), value) - out.values.begin());
  };

  out.coincidences = Eigen::MatrixXd::Zero(v, v);
  for (const auto& [id, vals] : units) {
    const auto m = static_cast<double>(vals.size());
    if (vals.size() < 2) continue;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (i != j) out.coincidences(index_of(vals[i]), index_of(vals[j])) += 1.0 / (m - 1.0);
      }
    }
  }
  const Eigen::VectorXd marginals = out.coincidences.rowwise().sum();
  const double n = marginals.sum();
  out.pairable_values = n;

  Eigen::MatrixXd delta2 = Eigen::MatrixXd::Zero(v, v);
  for (Index c = 0; c < v; ++c) {
    for (Index k = 0; k < v; ++k) {
      if (c == k) continue;
      if (metric == DistanceMetric::nominal) {
        delta2(c, k) = 1.0;
      } else {
        const Index lo = std::min(c, k), hi = std::max(c, k);
        const double d = marginals.segment(lo, hi - lo + 1).sum() - 0.5 * (marginals[lo] + marginals[hi]);
        delta2(c, k) = d * d;
      }
    }
  }
  out.observed_disagreement = (out.coincidences.array() * delta2.array()).sum() / n;
  out.expected_disagreement = ((marginals * marginals.transpose()).array() * delta2.array()).sum() / (n * (n - 1.0));
  if (out.expected_disagreement == 0.0) {
    warn("all pairable ratings share one value; expected disagreement is 0, reporting alpha = 1");
    out.alpha = 1.0;
    return out;
  }
  out.alpha = 1.0 - out.observed_disagreement / out.expected_disagreement;
  return out;
}

double krippendorff_alpha(std::span<const RatingRecord> records, DistanceMetric metric) {
  return krippendorff_alpha_detail(records, metric).alpha;
}

std::string histogram_key(pipeline::Exercise exercise, pipeline::Side side) {
  std::string key = pipeline::to_string(exercise);
  if (side != pipeline::Side::none) key += "-" + pipeline::to_string(side);
  return key;
}

LabeledDataset build_labeled_dataset(const pipeline::Dataset& dataset, std::span<const RatingRecord> records) {
  std::map<std::string, std::vector<int>> scores;
  for (const auto& r : records) scores[r.repetition_id].push_back(r.score);

  LabeledDataset out;
  out.dataset.manifest = dataset.manifest;
  out.dataset.alignment = dataset.alignment;
  for (auto a : kAgreements) out.category_counts[a] = 0;
  for (const auto& rep : dataset.repetitions) {
    auto it = scores.find(rep.id);
    if (it == scores.end() || it->second.empty()) {
      out.excluded_unrated.push_back(rep.id);
      continue;
    }
    const AgreementResult res = aggregate(it->second);
    ++out.category_counts[res.category];
    if (!res.final_label) {
      out.excluded_no_majority.push_back(rep.id);
      continue;
    }
    pipeline::Repetition kept = rep;
    kept.ratings = it->second;
    kept.final_label = res.final_label;
    ++out.label_histograms[histogram_key(rep.exercise, rep.side)][*res.final_label - 1];
    out.dataset.repetitions.push_back(std::move(kept));
  }
  for (const auto& r : records) {
    if (out.dataset.find(r.repetition_id)) out.dataset.ratings.push_back(r);
  }
  if (!out.excluded_unrated.empty()) {
    warn(std::to_string(out.excluded_unrated.size()) + " repetition(s) have no ratings and were excluded");
  }
  return out;
}

}  // namespace fmsnet::labels
