// Acceptance suite: one PASS/FAIL line per criterion.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fmsnet/arch/builder.hpp"
#include "fmsnet/cli/cli.hpp"
#include "fmsnet/harness/experiment.hpp"
#include "fmsnet/harness/run_io.hpp"
#include "fmsnet/labels/labels.hpp"
#include "fmsnet/sweep/sweep.hpp"
#include "fmsnet/synthgen/synthgen.hpp"
#include "support/alpha_oracle.hpp"
#include "support/fixtures.hpp"
#include "support/layer_gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/param_count.hpp"
#include "support/reps.hpp"
#include "support/warnings.hpp"

using namespace fmsnet;
namespace fs = std::filesystem;
using nn::Index;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// --- AC1 -------------------------------------------------------------------

constexpr double kGradTolerance = 1e-4;
constexpr int kGradInstances = 20;

Outcome ac1_gradients() {
  using Check = testing::GradCheckResult (*)(std::uint64_t);
  const std::pair<const char*, Check> layers[] = {
      {"conv2d", testing::check_conv2d},
      {"maxpool2d", testing::check_maxpool},
      {"dropout", testing::check_dropout},
      {"batchnorm/train", [](std::uint64_t s) { return testing::check_batchnorm(s, true); }},
      {"batchnorm/infer", [](std::uint64_t s) { return testing::check_batchnorm(s, false); }},
      {"dense", testing::check_dense},
      {"lstm", testing::check_lstm},
      {"softmax_crossentropy", testing::check_softmax_crossentropy},
  };
  double worst = 0.0;
  std::string where;
  long checked = 0;
  auto record = [&](const testing::GradCheckResult& r, const std::string& label) {
    checked += r.checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = label + " " + r.worst;
    }
  };
  for (std::uint64_t seed = 1; seed <= kGradInstances; ++seed) {
    for (const auto& [name, check] : layers) record(check(seed), std::string(name) + " seed " + std::to_string(seed));
  }
  const double layer_worst = worst;
  // Full-size best configuration: 17 IMUs, 256 LSTM units, 512/128 dense head. Every parameter
  // tensor is probed at seeded random entries. An entry above tolerance is re-differenced with
  // h = 1e-7: agreement there means the h = 1e-5 stencil straddled a max-pool argmax switch.
  arch::ModelConfig best = arch::best_config();
  best.windows = 3;
  const auto layout = pipeline::SensorLayout::numbered(17);
  long network_checked = 0, above = 0, kinks = 0;
  double network_worst = 0.0, fine_worst = 0.0;
  std::string network_where;
  for (std::uint64_t seed = 1; seed <= kGradInstances; ++seed) {
    auto net = arch::build_model<double>(best, layout, 30, seed);
    nn::Rng rng(seed + 1000);
    const auto batch = testing::random_batch(net.topology(), 2, 3, rng);
    net.compute_gradients(batch, seed);
    auto params = net.parameters();
    auto loss = [&] { return static_cast<double>(net.loss(batch, nn::Mode::training, seed)); };
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& value = *params[i].value;
      const nn::Tensor<double> grad = *params[i].grad;
      nn::Rng pick(nn::mix_seed(seed, i));
      for (int k = 0; k < 3; ++k) {
        const auto e = static_cast<Index>(pick.below(static_cast<std::uint64_t>(value.size())));
        auto central = [&](double h) {
          const double saved = value[e];
          value[e] = saved + h;
          const double up = loss();
          value[e] = saved - h;
          const double down = loss();
          value[e] = saved;
          return (up - down) / (2 * h);
        };
        const double err = testing::relative_error(grad[e], central(testing::kFdStep));
        ++network_checked;
        if (err > network_worst) {
          network_worst = err;
          network_where = params[i].name + "[" + std::to_string(e) + "] seed " + std::to_string(seed);
        }
        if (err >= kGradTolerance) {
          ++above;
          const double fine = testing::relative_error(grad[e], central(1e-7));
          fine_worst = std::max(fine_worst, fine);
          kinks += fine < kGradTolerance;
        }
      }
    }
  }
  const bool pass = layer_worst < kGradTolerance && network_worst < kGradTolerance;
  std::string detail = "layers: max rel err " + fmt(layer_worst, 3) + " over " + std::to_string(checked) +
                       " entries (" + std::to_string(kGradInstances) + " seeds); full network: max rel err " +
                       fmt(network_worst, 3) + " at " + network_where + ", " + std::to_string(above) + "/" +
                       std::to_string(network_checked) + " entries at or above " + fmt(kGradTolerance);
  if (above > 0) {
    detail += "; " + std::to_string(kinks) + " of them agree at h=1e-7 (max-pool kink crossings, worst " +
              fmt(fine_worst, 3) + ")";
  }
  if (!pass && layer_worst >= kGradTolerance) detail += "; worst layer: " + where;
  return {pass, detail};
}

// --- AC2 -------------------------------------------------------------------

nn::Batch<double> append_padding(const nn::Batch<double>& b, Index extra) {
  const Index batch = b.windows.dim(0), steps = b.windows.dim(1), rows = b.windows.dim(2), len = b.windows.dim(3);
  nn::Batch<double> out;
  out.windows = nn::Tensor<double>({batch, steps + extra, rows, len});
  out.mask = nn::MaskMatrix::Constant(batch, steps + extra, false);
  for (Index i = 0; i < batch; ++i) {
    std::copy(b.windows.data() + i * steps * rows * len, b.windows.data() + (i + 1) * steps * rows * len,
              out.windows.data() + i * (steps + extra) * rows * len);
    out.mask.row(i).head(steps) = b.mask.row(i);
  }
  out.labels = b.labels;
  return out;
}

Outcome ac2_masking() {
  const auto layout = pipeline::SensorLayout::numbered(17);
  const Index windows = 10, max_length = 300;
  arch::ModelConfig best = arch::best_config();
  best.windows = windows;
  auto net = arch::build_model<double>(best, layout, max_length / windows, 7);
  nn::Rng rng(2);
  double max_change = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Index length = 40 + static_cast<Index>(rng.below(max_length - 40 + 1));
    const auto rep = testing::random_repetition(layout, length, rng, "rep" + std::to_string(i));
    pipeline::ScalerParams scaler{-2, 2, -200, 200, true};
    const auto matrix = pipeline::apply_scaler(pipeline::arrange_channels(rep, layout), layout, scaler);
    auto sample = pipeline::pad_and_window(matrix, length, max_length, windows);
    sample.label = 1;
    const auto batch = harness::make_batch({sample}, 0, 1);
    const auto base = net.predict_proba(batch);
    const Index extra = 1 + static_cast<Index>(rng.below(5));
    const auto padded = net.predict_proba(append_padding(batch, extra));
    max_change = std::max(max_change, (padded - base).cwiseAbs().maxCoeff());
  }
  return {max_change == 0.0, "max |delta p| " + fmt(max_change) + " over 100 repetitions"};
}

// --- AC3 / AC4 -------------------------------------------------------------

constexpr double kLearnableF1 = 0.90;
constexpr double kMinGap = 0.20;
constexpr double kLearnSeconds = 15 * 60;

/// 12 subjects x 30 class-balanced DS repetitions, error-free raters.
harness::ExperimentReport learnability_run(double confound) {
  synthgen::GeneratorSpec s;
  s.subjects = 12;
  s.repetitions = 30;
  s.exercises = {pipeline::Exercise::DS};
  s.imus = 2;
  s.min_length = 100;
  s.max_length = 200;
  s.class_effect = 3.0;
  s.subject_confound = confound;
  s.noise = 0.1;
  s.balanced = true;
  s.raters = {0.0, 0.0};
  s.seed = 3;
  const auto generated = synthgen::generate(s);
  const auto labeled = labels::build_labeled_dataset(generated.dataset, generated.dataset.ratings);
  harness::ExperimentOptions o;
  o.folds = 3;
  o.epochs = 50;
  o.patience = 15;
  o.seed = 1;
  return harness::run_experiment(labeled.dataset, arch::best_config(), o, "DS");
}

std::string f1_summary(const harness::ExperimentReport& r) {
  return "train " + fmt(r.train_f1.mean, 3) + ", validation " + fmt(r.validation_f1.mean, 3) + ", test " +
         fmt(r.test_f1.mean, 3);
}

Outcome ac3_learnability() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = learnability_run(0.0);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {r.validation_f1.mean >= kLearnableF1 && seconds < kLearnSeconds,
          f1_summary(r) + " in " + fmt(seconds, 4) + " s"};
}

Outcome ac4_generalization_gap() {
  const auto r = learnability_run(3.0);
  const double gap = r.validation_f1.mean - r.test_f1.mean;
  return {gap >= kMinGap, f1_summary(r) + ", gap " + fmt(gap, 3)};
}

// --- AC5 -------------------------------------------------------------------

Outcome ac5_architecture_grid() {
  testing::WarningCapture quiet;
  synthgen::GeneratorSpec s;
  s.subjects = 2;
  s.repetitions = 4;
  s.exercises = {pipeline::Exercise::DS};
  s.imus = 17;
  s.min_length = 100;
  s.max_length = 200;
  s.windows = 10;
  s.balanced = true;
  s.seed = 5;
  const auto generated = synthgen::generate(s);
  const auto labeled = labels::build_labeled_dataset(generated.dataset, generated.dataset.ratings);
  const Index window_length = harness::prepare_dataset(labeled.dataset).max_length / s.windows;

  int ok = 0;
  std::string failures;
  for (int v = 0; v < 3; ++v) {
    for (int blocks = 1; blocks <= 3; ++blocks) {
      arch::ModelConfig c = arch::best_config();
      c.variant = static_cast<arch::Variant>(v);
      c.cnn_blocks = blocks;
      c.windows = s.windows;
      auto net = arch::build_model<double>(c, labeled.dataset.manifest.layout, window_length, 1);
      testing::CountInput in;
      in.variant = v;
      in.blocks = blocks;
      in.window_length = window_length;
      const bool counted = net.trainable_parameter_count() == testing::expected_parameter_count(in);
      harness::ExperimentOptions o;
      o.folds = 1;
      o.epochs = 1;
      o.abort_on_divergence = true;
      bool trained = true;
      try {
        const auto r = harness::run_experiment(labeled.dataset, c, o, "DS");
        trained = !r.diverged && std::isfinite(r.folds[0].history.at(0).train_loss);
      } catch (const std::exception& e) {
        trained = false;
      }
      if (counted && trained) {
        ++ok;
      } else {
        failures += " " + arch::describe(c) + (counted ? "" : " [count]") + (trained ? "" : " [epoch]");
      }
    }
  }
  return {ok == 9, std::to_string(ok) + "/9 configurations counted and trained one epoch" + failures};
}

// --- AC6 -------------------------------------------------------------------

Outcome ac6_metrics() {
  nn::Rng rng(606);
  double worst = 0.0;
  bool confusion_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<int> truth(n), pred(n);
    for (auto& x : truth) x = static_cast<int>(rng.below(3));
    for (auto& x : pred) x = static_cast<int>(rng.below(3));
    const auto r = harness::evaluate_predictions(truth, pred);
    double f1_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += pred[i] == k && truth[i] == k;
        fp += pred[i] == k && truth[i] != k;
        fn += pred[i] != k && truth[i] == k;
      }
      const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      const double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
      const double f1 = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
      worst = std::max(worst, std::abs(r.f1[k] - f1));
      f1_sum += f1;
      for (int q = 0; q < 3; ++q) {
        Index count = 0;
        for (std::size_t i = 0; i < n; ++i) count += truth[i] == k && pred[i] == q;
        confusion_ok = confusion_ok && r.confusion(k, q) == count;
      }
    }
    worst = std::max(worst, std::abs(r.macro_f1 - f1_sum / 3.0));
  }
  harness::ConfusionMatrix worked;
  worked << 2, 0, 0, 0, 0, 2, 0, 0, 0;
  const double example = harness::macro_f1(worked);
  const bool example_ok = std::abs(example - 1.0 / 3.0) <= 1e-12;
  return {worst <= 1e-12 && confusion_ok && example_ok,
          "max |F1 - oracle| " + fmt(worst, 3) + " on 1000 sets, confusion " + (confusion_ok ? "exact" : "MISMATCH") +
              ", worked example " + fmt(example, 17)};
}

// --- AC7 -------------------------------------------------------------------

std::vector<labels::RatingRecord> to_records(const testing::ReliabilityMatrix& data) {
  std::vector<labels::RatingRecord> out;
  for (std::size_t o = 0; o < data.size(); ++o) {
    for (std::size_t u = 0; u < data[o].size(); ++u) {
      if (data[o][u]) out.push_back({"u" + std::to_string(u), "r" + std::to_string(o), *data[o][u]});
    }
  }
  return out;
}

Outcome ac7_alpha() {
  const testing::ReliabilityMatrix perfect{{1, 2, 3, 3, 2, 1}, {1, 2, 3, 3, 2, 1}, {1, 2, 3, 3, 2, 1}};
  const double a_perfect = labels::krippendorff_alpha(to_records(perfect));

  using std::nullopt;
  const std::vector<testing::ReliabilityMatrix> fixed{
      {{1, 2, 3, 3, 2, 1}, {1, 2, 2, 3, 3, 1}, {2, 2, 3, 3, 2, 3}},
      {{1, 1, 2, 3, 3, 2}, {2, 1, 2, 3, 1, 2}, {1, 3, 2, 2, 3, 2}},
      {{3, 2, 1, nullopt, 2, 1}, {3, 1, 1, 2, 2, nullopt}, {2, 2, 1, 2, 3, 1}},
  };
  double worst = 0.0;
  for (const auto& m : fixed) {
    for (bool ordinal : {true, false}) {
      const auto metric = ordinal ? labels::DistanceMetric::ordinal : labels::DistanceMetric::nominal;
      worst = std::max(worst, std::abs(labels::krippendorff_alpha(to_records(m), metric) -
                                       testing::alpha_by_hand(m, ordinal)));
    }
  }

  nn::Rng rng(707);
  testing::ReliabilityMatrix uniform(3, std::vector<std::optional<int>>(10000));
  for (auto& row : uniform)
    for (auto& cell : row) cell = 1 + static_cast<int>(rng.below(3));
  const double a_uniform = labels::krippendorff_alpha(to_records(uniform));
  return {a_perfect == 1.0 && worst <= 1e-10 && std::abs(a_uniform) < 0.05,
          "perfect " + fmt(a_perfect) + ", max |alpha - hand oracle| " + fmt(worst, 3) + ", uniform 10^4 units " +
              fmt(a_uniform, 3)};
}

// --- AC8 -------------------------------------------------------------------

Outcome ac8_split_hygiene() {
  testing::WarningCapture quiet;
  synthgen::GeneratorSpec s;
  s.subjects = 17;
  s.repetitions = 6;
  s.exercises = {pipeline::Exercise::DS, pipeline::Exercise::HS};
  s.imus = 1;
  s.min_length = 30;
  s.max_length = 60;
  s.windows = 3;
  s.seed = 8;
  const auto generated = synthgen::generate(s);
  const auto labeled = labels::build_labeled_dataset(generated.dataset, generated.dataset.ratings);
  const auto data = harness::prepare_dataset(labeled.dataset);
  const auto plan = harness::make_losocv(harness::sample_keys(labeled.dataset), 17, 4);

  auto subject_of = [&](const std::string& id) {
    for (const auto& r : data.repetitions)
      if (r.id == id) return r.subject_id;
    return std::string();
  };
  int leaks = 0;
  std::set<std::string> tested;
  for (const auto& fold : plan.folds) {
    tested.insert(fold.test_subject);
    const auto p = harness::prepare_fold(data, fold, s.windows);
    for (const auto* ids : {&p.train_ids, &p.validation_ids, &p.scaler_ids}) {
      for (const auto& id : *ids) leaks += subject_of(id) == fold.test_subject;
    }
    for (const auto& id : p.test_ids) leaks += subject_of(id) != fold.test_subject;
    // The scaler is refit from the training repetitions alone, and ignores the test subject's signals.
    std::vector<pipeline::Repetition> train;
    for (auto i : fold.train) train.push_back(data.repetitions[i]);
    leaks += !(pipeline::fit_scaler(train) == p.scaler);
    auto altered = data;
    for (auto i : fold.test)
      for (auto& [imu, stream] : altered.repetitions[i].imus) stream.setConstant(1e6);
    leaks += !(harness::prepare_fold(altered, fold, s.windows).scaler == p.scaler);
  }
  const bool covered = tested.size() == 17;
  return {leaks == 0 && covered, std::to_string(plan.folds.size()) + " folds audited, " + std::to_string(leaks) +
                                     " leaks, " + std::to_string(tested.size()) + " distinct test subjects"};
}

// --- AC9 -------------------------------------------------------------------

Outcome ac9_sweep_determinism() {
  testing::WarningCapture quiet;
  const auto root = fs::temp_directory_path() / "fmsnet_acceptance_sweep";
  fs::remove_all(root);
  std::ostringstream sink;
  auto cli = [&](const std::vector<std::string>& args) { return cli::run_cli(args, sink, sink); };
  const auto data = (root / "data").string();
  const auto runs = (root / "runs").string();
  int code = cli({"synth", "--out", data, "--seed", "9", "--subjects", "6", "--repetitions", "4", "--exercises", "DS",
                  "--imus", "1", "--min-length", "40", "--max-length", "60", "--windows", "4", "--balanced"});
  const std::vector<std::string> sweep{"sweep",        "--data",   data,  "--n",     "120", "--folds",
                                       "5",            "--seed",   "11",  "--epochs", "1",  "--lstm-units",
                                       "4",            "--dense",  "4,3", "--runs-dir", runs};
  auto with_id = [&](const std::string& id) {
    auto a = sweep;
    a.insert(a.end(), {"--run-id", id});
    return a;
  };
  if (code == 0) code = cli(with_id("first"));
  if (code == 0) code = cli(with_id("second"));
  if (code != 0) return {false, "CLI exit code " + std::to_string(code) + ": " + sink.str()};
  const auto first = harness::read_file(fs::path(runs) / "first" / "leaderboard.csv");
  const auto second = harness::read_file(fs::path(runs) / "second" / "leaderboard.csv");
  const auto rows = std::count(first.begin(), first.end(), '\n') - 1;
  fs::remove_all(root);

  const std::size_t n = 10000;
  const auto configs = sweep::sample_configs(sweep::SearchSpace{}, n, 11);
  int outside = 0;
  auto check_axis = [&](auto key) {
    std::map<int, double> counts;
    for (const auto& c : configs) counts[key(c)] += 1;
    const double p = 1.0 / static_cast<double>(counts.size());
    const double sigma = std::sqrt(static_cast<double>(n) * p * (1 - p));
    for (const auto& [v, k] : counts) outside += std::abs(k - static_cast<double>(n) * p) > 3 * sigma;
  };
  check_axis([](const arch::ModelConfig& c) { return static_cast<int>(c.activation); });
  check_axis([](const arch::ModelConfig& c) { return c.cnn_blocks; });
  check_axis([](const arch::ModelConfig& c) { return static_cast<int>(c.scheme); });
  check_axis([](const arch::ModelConfig& c) { return static_cast<int>(c.regularization); });
  check_axis([](const arch::ModelConfig& c) { return c.lstm_layers; });
  check_axis([](const arch::ModelConfig& c) { return c.batch_size; });
  const bool same = first == second;
  return {same && rows == 120 && outside == 0,
          std::string("leaderboards ") + (same ? "identical" : "DIFFER") + " (" + std::to_string(rows) +
              " rows), axis values outside 3 sigma at 10^4 draws: " + std::to_string(outside)};
}

// --- AC10 ------------------------------------------------------------------

Outcome ac10_labels() {
  testing::WarningCapture quiet;
  synthgen::GeneratorSpec s;
  s.subjects = 20;
  s.repetitions = 500;
  s.exercises = {pipeline::Exercise::DS};
  s.imus = 1;
  s.min_length = 8;
  s.max_length = 12;
  s.windows = 2;
  s.raters = {0.1, 0.0};
  s.seed = 10;
  const auto generated = synthgen::generate(s);
  const auto labeled = labels::build_labeled_dataset(generated.dataset, generated.dataset.ratings);

  std::array<double, 4> expected{}, variance{};
  for (const auto& [id, label] : generated.truth) {
    const auto shares = testing::agreement_shares(synthgen::score_distribution(label, s.raters));
    for (int k = 0; k < 4; ++k) {
      expected[k] += shares[k];
      variance[k] += shares[k] * (1 - shares[k]);
    }
  }
  std::string detail = std::to_string(generated.truth.size()) + " repetitions;";
  bool shares_ok = true;
  for (int k = 0; k < 4; ++k) {
    const auto category = labels::kAgreements[k];
    const double observed = static_cast<double>(labeled.category_counts.count(category)
                                                    ? labeled.category_counts.at(category)
                                                    : 0);
    const double z = (observed - expected[k]) / std::sqrt(variance[k]);
    shares_ok = shares_ok && std::abs(z) <= 3.0;
    detail += " " + labels::to_string(category) + " " + fmt(observed, 6) + " vs " + fmt(expected[k], 6) + " (z " +
              fmt(z, 2) + ")";
  }

  const std::set<std::string> excluded(labeled.excluded_no_majority.begin(), labeled.excluded_no_majority.end());
  int leaked = 0;
  for (const auto& r : labeled.dataset.repetitions) leaked += excluded.count(r.id);
  const auto data = harness::prepare_dataset(labeled.dataset);
  const auto plan = harness::make_losocv(harness::sample_keys(labeled.dataset), 2, 1);
  for (const auto& fold : plan.folds) {
    const auto p = harness::prepare_fold(data, fold, s.windows);
    for (const auto& id : p.train_ids) leaked += excluded.count(id);
    for (const auto& id : p.validation_ids) leaked += excluded.count(id);
  }
  detail += "; " + std::to_string(excluded.size()) + " no-majority excluded, " + std::to_string(leaked) +
            " reached training";
  return {shares_ok && !excluded.empty() && leaked == 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria AC1-AC10"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 gradient suite", ac1_gradients},
      {"AC2 masking invariance", ac2_masking},
      {"AC3 learnability", ac3_learnability},
      {"AC4 generalization gap", ac4_generalization_gap},
      {"AC5 architecture grid", ac5_architecture_grid},
      {"AC6 metric oracles", ac6_metrics},
      {"AC7 krippendorff alpha", ac7_alpha},
      {"AC8 split hygiene", ac8_split_hygiene},
      {"AC9 sweep determinism", ac9_sweep_determinism},
      {"AC10 label pipeline", ac10_labels},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i + 1)) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << criteria[i].first << ": " << o.detail << " [" << fmt(seconds, 3)
              << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
