#include "fmsnet/synthgen/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "fmsnet/harness/run_io.hpp"
#include "fmsnet/labels/labels.hpp"
#include "fmsnet/nn/random.hpp"
#include "fmsnet/pipeline/dataset_io.hpp"

namespace fmsnet::synthgen {

namespace {

using pipeline::Index;

constexpr double kAccScale = 1.0;
constexpr double kGyrScale = 100.0;

double channel_scale(int c) { return c < 3 ? kAccScale : kGyrScale; }

/// Smooth per-channel movement shape over phase [0, 1].
struct Template {
  double a1, f1, p1, a2, f2, p2, bump, mu, width;

  double operator()(double phase) const {
    const double tau = 2.0 * std::numbers::pi;
    const double z = (phase - mu) / width;
    return a1 * std::sin(tau * f1 * phase + p1) + a2 * std::sin(tau * f2 * phase + p2) + bump * std::exp(-0.5 * z * z);
  }
};

Template draw_template(nn::Rng& rng) {
  Template t;
  t.a1 = rng.uniform(0.3, 1.0);
  t.f1 = rng.uniform(0.4, 1.1);
  t.p1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  t.a2 = rng.uniform(0.1, 0.4);
  t.f2 = rng.uniform(1.5, 2.5);
  t.p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  t.bump = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.0);
  t.mu = rng.uniform(0.3, 0.7);
  t.width = rng.uniform(0.08, 0.2);
  return t;
}

std::vector<pipeline::Side> sides_of(pipeline::Exercise e) {
  if (e == pipeline::Exercise::HS || e == pipeline::Exercise::IL) return {pipeline::Side::left, pipeline::Side::right};
  return {pipeline::Side::none};
}

int draw_label(const std::array<double, 3>& prior, nn::Rng& rng) {
  const double total = prior[0] + prior[1] + prior[2];
  const double u = rng.uniform() * total;
  if (u < prior[0]) return 1;
  if (u < prior[0] + prior[1]) return 2;
  return 3;
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

}  // namespace

void RaterRates::validate() const {
  if (!(adjacent >= 0.0 && adjacent <= 1.0 && two_step >= 0.0 && two_step <= 1.0)) {
    throw std::invalid_argument("rater error rates must lie in [0, 1]");
  }
  if (adjacent + two_step > 1.0 + 1e-12) throw std::invalid_argument("rater error rates must sum to at most 1");
}

std::array<double, 3> score_distribution(int truth, const RaterRates& r) {
  if (truth < 1 || truth > 3) throw std::invalid_argument("true rating must be 1, 2 or 3");
  if (truth == 2) return {r.adjacent / 2, 1.0 - r.adjacent, r.adjacent / 2};
  std::array<double, 3> p{};
  p[truth - 1] = 1.0 - r.adjacent - r.two_step;
  p[1] = r.adjacent;
  p[truth == 1 ? 2 : 0] = r.two_step;
  return p;
}

void GeneratorSpec::validate() const {
  if (subjects < 1) throw std::invalid_argument("subjects must be >= 1");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (exercises.empty()) throw std::invalid_argument("at least one exercise is required");
  if (imus < 1) throw std::invalid_argument("imus must be >= 1");
  if (min_length < 1 || max_length < min_length) throw std::invalid_argument("durations must satisfy 1 <= min <= max");
  if (windows < 1) throw std::invalid_argument("windows must be >= 1");
  if (!(class_effect >= 0.0) || !(subject_confound >= 0.0) || !(noise >= 0.0)) {
    throw std::invalid_argument("class_effect, subject_confound and noise must be >= 0");
  }
  raters.validate();
  for (const auto& [key, p] : label_priors) {
    if (p[0] < 0 || p[1] < 0 || p[2] < 0 || p[0] + p[1] + p[2] <= 0) {
      throw std::invalid_argument("label prior '" + key + "' must be non-negative with a positive sum");
    }
  }
}

std::array<double, 3> GeneratorSpec::prior(const std::string& key) const {
  const auto it = label_priors.find(key);
  return it == label_priors.end() ? std::array<double, 3>{0.2, 0.55, 0.25} : it->second;
}

std::map<std::string, std::array<double, 3>> skewed_priors() {
  return {{"DS", {0.15, 0.6, 0.25}},       {"TSP", {0.2, 0.65, 0.15}},
          {"HS-left", {1.0 / 16, 14.0 / 16, 1.0 / 16}}, {"HS-right", {0.1, 0.75, 0.15}},
          {"IL-left", {0.1, 0.6, 0.3}},    {"IL-right", {0.1, 0.6, 0.3}}};
}

nlohmann::json to_json(const GeneratorSpec& s) {
  nlohmann::json exercises = nlohmann::json::array();
  for (auto e : s.exercises) exercises.push_back(pipeline::to_string(e));
  nlohmann::json priors = nlohmann::json::object();
  for (const auto& [k, p] : s.label_priors) priors[k] = p;
  return {{"subjects", s.subjects},
          {"repetitions", s.repetitions},
          {"exercises", exercises},
          {"imus", s.imus},
          {"min_length", s.min_length},
          {"max_length", s.max_length},
          {"windows", s.windows},
          {"class_effect", s.class_effect},
          {"subject_confound", s.subject_confound},
          {"noise", s.noise},
          {"rater_adjacent_error", s.raters.adjacent},
          {"rater_two_step_error", s.raters.two_step},
          {"balanced", s.balanced},
          {"label_priors", priors},
          {"seed", s.seed}};
}

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  static const std::set<std::string> known{"subjects",  "repetitions",      "exercises",   "imus",
                                           "min_length", "max_length",      "windows",     "class_effect",
                                           "subject_confound", "noise",     "rater_adjacent_error",
                                           "rater_two_step_error", "balanced", "label_priors", "preset", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown generator field '" + key + "'");
  }
  s.subjects = j.value("subjects", s.subjects);
  s.repetitions = j.value("repetitions", s.repetitions);
  if (j.contains("exercises")) {
    s.exercises.clear();
    for (const auto& e : j.at("exercises")) s.exercises.push_back(pipeline::exercise_from_string(e.get<std::string>()));
  }
  s.imus = j.value("imus", s.imus);
  s.min_length = j.value("min_length", s.min_length);
  s.max_length = j.value("max_length", s.max_length);
  s.windows = j.value("windows", s.windows);
  s.class_effect = j.value("class_effect", s.class_effect);
  s.subject_confound = j.value("subject_confound", s.subject_confound);
  s.noise = j.value("noise", s.noise);
  s.raters.adjacent = j.value("rater_adjacent_error", s.raters.adjacent);
  s.raters.two_step = j.value("rater_two_step_error", s.raters.two_step);
  s.balanced = j.value("balanced", s.balanced);
  if (j.value("preset", std::string{}) == "skewed") {
    s.label_priors = skewed_priors();
  } else if (j.contains("preset")) {
    throw std::invalid_argument("unknown preset '" + j.at("preset").get<std::string>() + "'");
  }
  if (j.contains("label_priors")) {
    for (const auto& [k, v] : j.at("label_priors").items()) s.label_priors[k] = v.get<std::array<double, 3>>();
  }
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

GeneratedDataset generate(const GeneratorSpec& spec) {
  spec.validate();
  GeneratedDataset out;
  pipeline::Dataset& ds = out.dataset;
  ds.manifest.layout = pipeline::SensorLayout::numbered(spec.imus);
  ds.manifest.windows = spec.windows;
  ds.manifest.exercises = spec.exercises;
  const int channels = static_cast<int>(spec.imus) * pipeline::kChannelsPerImu;

  // Templates depend only on (seed, exercise); subject offsets on (seed, subject).
  std::map<pipeline::Exercise, std::vector<Template>> templates;
  for (auto e : spec.exercises) {
    nn::Rng rng(nn::mix_seed(nn::mix_seed(spec.seed, 1), static_cast<std::uint64_t>(e)));
    for (int c = 0; c < channels; ++c) templates[e].push_back(draw_template(rng));
  }
  const double attenuation = 0.6 * (1.0 - std::exp(-spec.class_effect));
  const double truncation = 0.5 * (1.0 - std::exp(-spec.class_effect));

  std::vector<std::pair<std::string, int>> truth;
  std::uint64_t rep_counter = 0;
  for (int s = 1; s <= spec.subjects; ++s) {
    const std::string subject = "s" + two_digits(s);
    ds.manifest.subjects.push_back(subject);
    nn::Rng subject_rng(nn::mix_seed(nn::mix_seed(spec.seed, 2), static_cast<std::uint64_t>(s)));
    std::array<Eigen::VectorXd, 3> offsets;
    for (auto& o : offsets) {
      o.resize(channels);
      for (int c = 0; c < channels; ++c) o[c] = spec.subject_confound * channel_scale(c % 6) * subject_rng.normal();
    }
    for (auto e : spec.exercises) {
      for (auto side : sides_of(e)) {
        const std::string key = labels::histogram_key(e, side);
        for (int r = 0; r < spec.repetitions; ++r) {
          nn::Rng rng(nn::mix_seed(nn::mix_seed(spec.seed, 3), rep_counter++));
          pipeline::Repetition rep;
          rep.id = subject + "_" + key + "_" + two_digits(r + 1);
          rep.subject_id = subject;
          rep.exercise = e;
          rep.side = side;
          const int label = spec.balanced ? 1 + r % 3 : draw_label(spec.prior(key), rng);
          rep.true_length = spec.min_length +
                            static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.max_length - spec.min_length + 1)));
          const double amplitude = label == 2 ? 1.0 - attenuation : 1.0;
          const double reach = label == 1 ? 1.0 - truncation : 1.0;
          const auto& tpl = templates.at(e);
          for (std::size_t i = 0; i < spec.imus; ++i) {
            pipeline::ImuStream stream(pipeline::kChannelsPerImu, rep.true_length);
            for (int c = 0; c < pipeline::kChannelsPerImu; ++c) {
              const int row = static_cast<int>(i) * pipeline::kChannelsPerImu + c;
              const double scale = channel_scale(c);
              for (Index t = 0; t < rep.true_length; ++t) {
                const double phase =
                    rep.true_length > 1 ? reach * static_cast<double>(t) / static_cast<double>(rep.true_length - 1) : 0.0;
                stream(c, t) = scale * (amplitude * tpl[row](phase) + spec.noise * rng.normal()) + offsets[label - 1][row];
              }
            }
            rep.imus.emplace(ds.manifest.layout.imu_ids[i], std::move(stream));
          }
          ds.manifest.max_length = std::max(ds.manifest.max_length, rep.true_length);
          out.truth[rep.id] = label;
          truth.emplace_back(rep.id, label);
          ds.repetitions.push_back(std::move(rep));
        }
      }
    }
  }
  ds.ratings = simulate_raters(truth, spec.raters, nn::mix_seed(spec.seed, 4));
  return out;
}

void write_generated(const GeneratedDataset& data, const GeneratorSpec& spec, const std::filesystem::path& dir) {
  pipeline::save_dataset(data.dataset, dir);
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [id, label] : data.truth) labels[id] = label;
  harness::write_file_atomic(dir / "ground_truth.json", nlohmann::json{{"labels", labels}}.dump(2) + "\n");
  harness::write_file_atomic(dir / "synthgen.json", to_json(spec).dump(2) + "\n");
}

std::vector<labels::RatingRecord> simulate_raters(const std::vector<std::pair<std::string, int>>& truth,
                                                  const RaterRates& rates, std::uint64_t seed, int raters) {
  rates.validate();
  nn::Rng rng(seed);
  std::vector<labels::RatingRecord> out;
  out.reserve(truth.size() * static_cast<std::size_t>(raters));
  for (const auto& [id, label] : truth) {
    const auto p = score_distribution(label, rates);
    for (int r = 1; r <= raters; ++r) {
      const double u = rng.uniform();
      const int score = u < p[0] ? 1 : (u < p[0] + p[1] ? 2 : 3);
      out.push_back({id, "r" + std::to_string(r), score});
    }
  }
  return out;
}

}  // namespace fmsnet::synthgen
