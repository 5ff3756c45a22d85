#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmsnet/labels/rating.hpp"
#include "fmsnet/pipeline/types.hpp"

namespace fmsnet::synthgen {

/// Per-rater score flips. A two-step error (1 <-> 3) is only possible from ratings 1 and 3.
struct RaterRates {
  double adjacent = 0.1;
  double two_step = 0.0;

  /// Throws std::invalid_argument unless both lie in [0, 1] and sum to at most 1.
  void validate() const;
};

/// P(score = 1, 2, 3) for one rater given the true rating.
std::array<double, 3> score_distribution(int truth, const RaterRates& rates);

struct GeneratorSpec {
  int subjects = 12;
  /// Repetitions per (subject, exercise, side).
  int repetitions = 10;
  std::vector<pipeline::Exercise> exercises{pipeline::Exercise::DS, pipeline::Exercise::HS, pipeline::Exercise::IL,
                                            pipeline::Exercise::TSP};
  std::size_t imus = 17;
  pipeline::Index min_length = 240;
  pipeline::Index max_length = 720;
  pipeline::Index windows = 10;
  /// 0 makes every rating produce the same movement.
  double class_effect = 1.0;
  /// Scale of per-subject channel offsets, drawn separately for each rating.
  double subject_confound = 0.0;
  /// Gaussian noise in units of the channel scale (1 g, 100 deg/s).
  double noise = 0.05;
  RaterRates raters{};
  /// Labels cycle 1, 2, 3 within each (subject, exercise, side) instead of following the priors.
  bool balanced = false;
  /// Rating priors keyed "DS", "TSP", "HS-left", ...; missing keys use {0.2, 0.55, 0.25}.
  std::map<std::string, std::array<double, 3>> label_priors{};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  std::array<double, 3> prior(const std::string& key) const;
};

/// Priors where rating 2 is 14 times as frequent as each other rating on HS-left.
std::map<std::string, std::array<double, 3>> skewed_priors();

nlohmann::json to_json(const GeneratorSpec& spec);
/// Missing fields keep their defaults.
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);

struct GeneratedDataset {
  pipeline::Dataset dataset;  // raw repetitions plus simulated ratings
  std::map<std::string, int> truth;
};

/// Deterministic in `spec`; each repetition draws from its own seed.
///
/// Signal per channel: a smooth template of two sinusoids and a Gaussian bump over the
/// movement phase, fixed per exercise. Rating 2 attenuates the amplitude and rating 1
/// truncates the movement phase, both scaled by class_effect. A per-(subject, rating)
/// channel offset scaled by subject_confound and Gaussian noise are added on top.
GeneratedDataset generate(const GeneratorSpec& spec);

/// Writes the pipeline dataset (manifest, reps, ratings.csv) plus ground_truth.json and synthgen.json.
void write_generated(const GeneratedDataset& data, const GeneratorSpec& spec, const std::filesystem::path& dir);

/// Three independent raters "r1".."r3" per repetition, in input order.
std::vector<labels::RatingRecord> simulate_raters(const std::vector<std::pair<std::string, int>>& truth,
                                                  const RaterRates& rates, std::uint64_t seed, int raters = 3);

}  // namespace fmsnet::synthgen
