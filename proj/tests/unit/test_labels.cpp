#include <doctest.h>

#include <algorithm>

#include "fmsnet/labels/labels.hpp"
#include "support/alpha_oracle.hpp"
#include "support/reps.hpp"
#include "support/warnings.hpp"

using namespace fmsnet;
using labels::Agreement;
using labels::DistanceMetric;
using labels::RatingRecord;

namespace {

std::vector<RatingRecord> to_records(const testing::ReliabilityMatrix& data) {
  std::vector<RatingRecord> out;
  for (std::size_t o = 0; o < data.size(); ++o) {
    for (std::size_t u = 0; u < data[o].size(); ++u) {
      if (data[o][u]) out.push_back({"u" + std::to_string(u), "obs" + std::to_string(o), *data[o][u]});
    }
  }
  return out;
}

testing::ReliabilityMatrix random_matrix(nn::Rng& rng, std::size_t units, int raters) {
  testing::ReliabilityMatrix m(raters, std::vector<std::optional<int>>(units));
  for (auto& row : m)
    for (auto& cell : row) cell = 1 + static_cast<int>(rng.below(3));
  return m;
}

}  // namespace

TEST_CASE("aggregate categories") {
  CHECK(labels::aggregate(2, 2, 2) == labels::AgreementResult{2, Agreement::unambiguous});
  CHECK(labels::aggregate(2, 2, 3) == labels::AgreementResult{2, Agreement::majority_minor});
  CHECK(labels::aggregate(1, 3, 3) == labels::AgreementResult{3, Agreement::majority_major});
  CHECK(labels::aggregate(1, 2, 3) == labels::AgreementResult{std::nullopt, Agreement::no_majority});
  CHECK_THROWS_AS(labels::aggregate(0, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(labels::aggregate(2, 4, 2), std::invalid_argument);
}

TEST_CASE("aggregate is permutation invariant over all 27 triples") {
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b)
      for (int c = 1; c <= 3; ++c) {
        std::array<int, 3> s{a, b, c};
        const auto ref = labels::aggregate(s);
        CHECK(ref.final_label.has_value() == (ref.category != Agreement::no_majority));
        CHECK((ref.category == Agreement::unambiguous) == (a == b && b == c));
        std::sort(s.begin(), s.end());
        do {
          CHECK(labels::aggregate(s) == ref);
        } while (std::next_permutation(s.begin(), s.end()));
      }
}

TEST_CASE("alpha on perfect agreement and constant data") {
  testing::ReliabilityMatrix perfect{{1, 2, 3, 2}, {1, 2, 3, 2}, {1, 2, 3, 2}};
  CHECK(labels::krippendorff_alpha(to_records(perfect)) == 1.0);
  CHECK(labels::krippendorff_alpha(to_records(perfect), DistanceMetric::nominal) == 1.0);

  testing::WarningCapture warnings;
  testing::ReliabilityMatrix constant{{2, 2, 2}, {2, 2, 2}};
  CHECK(labels::krippendorff_alpha(to_records(constant)) == 1.0);
  CHECK(warnings.messages.size() == 1);

  testing::ReliabilityMatrix single{{1, 2}, {std::nullopt, 2}};
  CHECK_THROWS_AS(labels::krippendorff_alpha(to_records(single)), std::invalid_argument);
  std::vector<RatingRecord> dup{{"a", "x", 1}, {"a", "x", 2}, {"b", "x", 1}, {"b", "y", 1}};
  CHECK_THROWS_AS(labels::krippendorff_alpha(dup), std::invalid_argument);
}

TEST_CASE("alpha matches the step-by-step hand oracle") {
  const testing::ReliabilityMatrix fixed{{1, 2, 3, 3, 2, 1}, {1, 2, 2, 3, 3, 1}, {2, 2, 3, 3, 2, 3}};
  for (bool ordinal : {true, false}) {
    const auto metric = ordinal ? DistanceMetric::ordinal : DistanceMetric::nominal;
    CHECK(std::abs(labels::krippendorff_alpha(to_records(fixed), metric) - testing::alpha_by_hand(fixed, ordinal)) <
          1e-10);
  }
  nn::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = random_matrix(rng, 6, 3);
    for (auto& row : m)
      for (auto& cell : row)
        if (rng.uniform() < 0.1) cell.reset();
    const auto records = to_records(m);
    bool ok = true;
    try {
      labels::krippendorff_alpha(records);
    } catch (const std::invalid_argument&) {
      ok = false;
    }
    if (!ok) continue;
    const auto detail = labels::krippendorff_alpha_detail(records);
    if (detail.expected_disagreement == 0.0) continue;
    CHECK(std::abs(detail.alpha - testing::alpha_by_hand(m, true)) < 1e-10);
    CHECK(std::abs(labels::krippendorff_alpha(records, DistanceMetric::nominal) - testing::alpha_by_hand(m, false)) <
          1e-10);
  }
}

TEST_CASE("alpha on Krippendorff's published 4-observer example") {
  using std::nullopt;
  const testing::ReliabilityMatrix data{
      {1, 2, 3, 3, 2, 1, 4, 1, 2, nullopt, nullopt, nullopt},
      {1, 2, 3, 3, 2, 2, 4, 1, 2, 5, nullopt, 3},
      {nullopt, 3, 3, 3, 2, 3, 4, 2, 2, 5, 1, nullopt},
      {1, 2, 3, 3, 2, 4, 4, 1, 2, 5, 1, nullopt}};
  CHECK(labels::krippendorff_alpha(to_records(data), DistanceMetric::nominal) == doctest::Approx(0.743).epsilon(1e-3));
  CHECK(labels::krippendorff_alpha(to_records(data), DistanceMetric::ordinal) == doctest::Approx(0.815).epsilon(1e-3));
}

TEST_CASE("alpha near zero for independent uniform ratings") {
  nn::Rng rng(2024);
  const auto m = random_matrix(rng, 10000, 3);
  CHECK(std::abs(labels::krippendorff_alpha(to_records(m))) < 0.05);
}

TEST_CASE("alpha invariances") {
  nn::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = random_matrix(rng, 15, 3);
    auto records = to_records(m);
    const double ref = labels::krippendorff_alpha(records);
    auto renamed = records;
    for (auto& r : renamed) r.rater_id = r.rater_id == "obs0" ? "obs2" : r.rater_id == "obs2" ? "obs0" : r.rater_id;
    CHECK(std::abs(labels::krippendorff_alpha(renamed) - ref) < 1e-12);
    auto shuffled = records;
    nn::shuffle(shuffled, rng);
    CHECK(std::abs(labels::krippendorff_alpha(shuffled) - ref) < 1e-12);
  }

  testing::ReliabilityMatrix perfect{{1, 2, 3, 2, 1}, {1, 2, 3, 2, 1}, {1, 2, 3, 2, 1}};
  auto records = to_records(perfect);
  CHECK(labels::krippendorff_alpha(records) == 1.0);
  records.push_back({"extra", "obs0", 2});
  records.push_back({"extra", "obs1", 2});
  records.push_back({"extra", "obs2", 3});
  CHECK(labels::krippendorff_alpha(records) < 1.0);

  // Only adjacent-category disagreements: ordinal weighs them less than nominal.
  testing::ReliabilityMatrix adjacent{{1, 2, 3, 2, 1, 3, 2}, {1, 2, 2, 2, 2, 3, 3}, {2, 2, 3, 1, 1, 3, 2}};
  const double ord = labels::krippendorff_alpha(to_records(adjacent), DistanceMetric::ordinal);
  const double nom = labels::krippendorff_alpha(to_records(adjacent), DistanceMetric::nominal);
  CHECK(ord > nom);
}

TEST_CASE("build_labeled_dataset") {
  nn::Rng rng(5);
  pipeline::Dataset ds;
  ds.manifest.layout = pipeline::SensorLayout::numbered(1);
  ds.manifest.max_length = 20;
  ds.manifest.windows = 2;
  std::vector<RatingRecord> unanimous, mixed;
  for (int i = 0; i < 10; ++i) {
    auto rep = testing::random_repetition(ds.manifest.layout, 10, rng, "r" + std::to_string(i));
    rep.exercise = pipeline::Exercise::HS;
    rep.side = i % 2 ? pipeline::Side::left : pipeline::Side::right;
    ds.repetitions.push_back(rep);
    for (int r = 0; r < 3; ++r) {
      unanimous.push_back({rep.id, "R" + std::to_string(r), 1 + i % 3});
      mixed.push_back({rep.id, "R" + std::to_string(r), i == 4 ? r + 1 : 2});
    }
  }
  auto all = labels::build_labeled_dataset(ds, unanimous);
  CHECK(all.dataset.repetitions.size() == 10);
  CHECK(all.excluded_no_majority.empty());
  CHECK(all.category_counts.at(Agreement::unambiguous) == 10);
  CHECK(all.label_histograms.at("HS-left")[0] + all.label_histograms.at("HS-right")[0] == 4);
  CHECK(all.dataset.repetitions[3].final_label == 1);

  auto nine = labels::build_labeled_dataset(ds, mixed);
  CHECK(nine.dataset.repetitions.size() == 9);
  CHECK(nine.excluded_no_majority == std::vector<std::string>{"r4"});
  CHECK(nine.category_counts.at(Agreement::no_majority) == 1);
  CHECK_FALSE(nine.dataset.find("r4"));
  CHECK(nine.dataset.ratings.size() == 27);

  testing::WarningCapture warnings;
  std::vector<RatingRecord> partial(unanimous.begin(), unanimous.end() - 3);
  auto missing = labels::build_labeled_dataset(ds, partial);
  CHECK(missing.excluded_unrated == std::vector<std::string>{"r9"});
  CHECK(missing.dataset.repetitions.size() == 9);
  CHECK(warnings.messages.size() == 1);
  CHECK(labels::histogram_key(pipeline::Exercise::DS, pipeline::Side::none) == "DS");
}
