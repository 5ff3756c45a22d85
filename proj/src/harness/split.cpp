#include "fmsnet/harness/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "fmsnet/log.hpp"
#include "fmsnet/nn/random.hpp"

namespace fmsnet::harness {

namespace {

/// Largest-remainder allocation of `total` slots across groups proportional to their sizes.
std::vector<std::size_t> allocate(const std::vector<std::size_t>& sizes, double fraction, std::size_t total) {
  std::vector<std::size_t> out(sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double exact = fraction * static_cast<double>(sizes[i]);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, i] : remainders) {
    if (used >= total) break;
    if (out[i] < sizes[i]) {
      ++out[i];
      ++used;
    }
  }
  return out;
}

}  // namespace

std::vector<SampleKey> sample_keys(const pipeline::Dataset& labeled) {
  std::vector<SampleKey> keys;
  for (const auto& rep : labeled.repetitions) {
    if (!rep.final_label) throw std::invalid_argument("repetition " + rep.id + " has no final label");
    keys.push_back({rep.subject_id, *rep.final_label});
  }
  return keys;
}

SplitPlan make_losocv(const std::vector<SampleKey>& samples, int folds, std::uint64_t seed,
                      const SplitOptions& options) {
  if (!(options.validation_fraction >= 0.0 && options.validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
  std::set<std::string> subject_set;
  for (const auto& s : samples) {
    if (s.label < 1 || s.label > 3) throw std::invalid_argument("sample label outside {1,2,3}");
    subject_set.insert(s.subject);
  }
  std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  if (folds < 1) throw std::invalid_argument("need at least one fold");
  if (static_cast<std::size_t>(folds) > subjects.size()) {
    throw std::invalid_argument("requested " + std::to_string(folds) + " folds but only " +
                                std::to_string(subjects.size()) + " subjects are available");
  }
  nn::Rng rng(seed);
  nn::shuffle(subjects, rng);

  SplitPlan plan;
  plan.seed = seed;
  plan.stratified = options.stratified;
  plan.validation_fraction = options.validation_fraction;
  for (int f = 0; f < folds; ++f) {
    Fold fold;
    fold.test_subject = subjects[f];
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      (samples[i].subject == fold.test_subject ? fold.test : pool).push_back(i);
    }
    nn::Rng fold_rng(nn::mix_seed(seed, static_cast<std::uint64_t>(f) + 1));
    nn::shuffle(pool, fold_rng);
    const auto total =
        static_cast<std::size_t>(std::llround(options.validation_fraction * static_cast<double>(pool.size())));

    std::vector<bool> to_validation(samples.size(), false);
    if (options.stratified) {
      std::vector<std::vector<std::size_t>> by_class(3);
      for (std::size_t i : pool) by_class[samples[i].label - 1].push_back(i);
      const auto take = allocate({by_class[0].size(), by_class[1].size(), by_class[2].size()},
                                 options.validation_fraction, total);
      for (int k = 0; k < 3; ++k) {
        for (std::size_t j = 0; j < take[k]; ++j) to_validation[by_class[k][j]] = true;
      }
    } else {
      for (std::size_t j = 0; j < total; ++j) to_validation[pool[j]] = true;
    }
    std::sort(pool.begin(), pool.end());
    std::set<int> present;
    for (std::size_t i : pool) {
      (to_validation[i] ? fold.validation : fold.train).push_back(i);
      present.insert(samples[i].label);
    }
    for (int k = 1; k <= 3; ++k) {
      if (!present.contains(k)) fold.missing_classes.push_back(k);
    }
    if (!fold.missing_classes.empty()) {
      warn("fold " + std::to_string(f) + " (test subject " + fold.test_subject + ") has no training samples of " +
           std::to_string(fold.missing_classes.size()) + " class(es)");
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

nlohmann::json to_json(const SplitPlan& plan, const std::vector<std::string>& ids) {
  auto name = [&](std::size_t i) -> nlohmann::json {
    if (ids.empty()) return i;
    return ids.at(i);
  };
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : plan.folds) {
    nlohmann::json train = nlohmann::json::array(), val = nlohmann::json::array(), test = nlohmann::json::array();
    for (auto i : f.train) train.push_back(name(i));
    for (auto i : f.validation) val.push_back(name(i));
    for (auto i : f.test) test.push_back(name(i));
    folds.push_back({{"test_subject", f.test_subject},
                     {"train", train},
                     {"validation", val},
                     {"test", test},
                     {"missing_classes", f.missing_classes}});
  }
  return {{"seed", plan.seed},
          {"stratified", plan.stratified},
          {"validation_fraction", plan.validation_fraction},
          {"folds", folds}};
}

}  // namespace fmsnet::harness
