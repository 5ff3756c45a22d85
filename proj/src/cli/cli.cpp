#include "fmsnet/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

#include "fmsnet/arch/builder.hpp"
#include "fmsnet/cli/run_manifest.hpp"
#include "fmsnet/harness/experiment.hpp"
#include "fmsnet/harness/run_io.hpp"
#include "fmsnet/labels/labels.hpp"
#include "fmsnet/log.hpp"
#include "fmsnet/nn/checkpoint.hpp"
#include "fmsnet/pipeline/dataset_io.hpp"
#include "fmsnet/sweep/sweep.hpp"
#include "fmsnet/synthgen/synthgen.hpp"

namespace fmsnet::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// --- shared flag groups -----------------------------------------------------

struct RunFlags {
  std::string runs_dir;
  std::string run_id;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  const char* env = std::getenv(kRunsDirEnv);
  f.runs_dir = env && *env ? env : "runs";
  app->add_option("--runs-dir", f.runs_dir, std::string("Parent directory of run directories (default $") +
                                                kRunsDirEnv + " or ./runs)");
  app->add_option("--run-id", f.run_id, "Run directory name (default: <command>-<UTC time>)");
}

struct ModelFlags {
  std::optional<std::string> config_file, variant, scheme, regularization, activation, dense;
  std::optional<int> blocks, lstm_layers, batch_size, windows, lstm_units;
};

void add_model_flags(CLI::App* app, ModelFlags& f) {
  app->add_option("--config", f.config_file, "Model configuration JSON (fields override the best configuration)");
  app->add_option("--variant", f.variant, "baseline | imu_centric | channel_centric");
  app->add_option("--blocks", f.blocks, "CNN blocks: 1, 2 or 3");
  app->add_option("--scheme", f.scheme, "inc_filters_fixed_kernel | inc_filters_dec_kernel");
  app->add_option("--regularization", f.regularization, "dropout | batchnorm");
  app->add_option("--lstm-layers", f.lstm_layers, "LSTM layers: 1 or 2");
  app->add_option("--activation", f.activation, "relu | elu | lrelu");
  app->add_option("--batch-size", f.batch_size, "4, 8, 16 or 32");
  app->add_option("--windows", f.windows, "Windows per repetition (default: the dataset's)");
  app->add_option("--lstm-units", f.lstm_units, "LSTM width");
  app->add_option("--dense", f.dense, "Dense head widths, comma separated, ending in 3 (e.g. 512,128,3)");
}

arch::ModelConfig model_config(const ModelFlags& f, pipeline::Index dataset_windows) {
  arch::ModelConfig c = arch::best_config();
  c.windows = static_cast<int>(dataset_windows);
  if (f.config_file) {
    json j = arch::to_json(c);
    j.update(json::parse(harness::read_file(*f.config_file)));
    c = arch::model_config_from_json(j);
  }
  if (f.variant) c.variant = arch::variant_from_string(*f.variant);
  if (f.blocks) c.cnn_blocks = *f.blocks;
  if (f.scheme) c.scheme = arch::scheme_from_string(*f.scheme);
  if (f.regularization) c.regularization = arch::regularization_from_string(*f.regularization);
  if (f.lstm_layers) c.lstm_layers = *f.lstm_layers;
  if (f.activation) c.activation = nn::activation_from_string(*f.activation);
  if (f.batch_size) c.batch_size = *f.batch_size;
  if (f.windows) c.windows = *f.windows;
  if (f.lstm_units) c.lstm_units = *f.lstm_units;
  if (f.dense) {
    c.dense_units.clear();
    std::stringstream s(*f.dense);
    for (std::string cell; std::getline(s, cell, ',');) {
      try {
        c.dense_units.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("--dense expects comma-separated integers, got '" + *f.dense + "'");
      }
    }
  }
  c.validate();
  return c;
}

struct TrainFlags {
  int folds = 5;
  std::uint64_t seed = 0;
  int epochs = 100;
  int patience = 15;
  double learning_rate = 1e-4;
  int workers = 1;
  bool no_stratify = false;
};

void add_train_flags(CLI::App* app, TrainFlags& f, bool workers) {
  app->add_option("--folds", f.folds, "LOSOCV folds (distinct test subjects)")->capture_default_str();
  app->add_option("--seed", f.seed, "Seed for splits, initialization and shuffling")->capture_default_str();
  app->add_option("--epochs", f.epochs, "Maximum epochs per fold")->capture_default_str();
  app->add_option("--patience", f.patience, "Early-stopping patience in epochs (0 disables)")->capture_default_str();
  app->add_option("--lr", f.learning_rate, "Adam learning rate")->capture_default_str();
  if (workers) app->add_option("--workers", f.workers, "Parallel worker threads")->capture_default_str();
  app->add_flag("--no-stratify", f.no_stratify, "Draw the validation share without class stratification");
}

harness::ExperimentOptions experiment_options(const TrainFlags& f) {
  harness::ExperimentOptions o;
  o.folds = f.folds;
  o.seed = f.seed;
  o.epochs = f.epochs;
  o.patience = f.patience;
  o.learning_rate = f.learning_rate;
  o.workers = f.workers;
  o.stratified = !f.no_stratify;
  return o;
}

// --- datasets and run directories ---------------------------------------------

struct LoadedData {
  pipeline::Dataset raw;
  labels::LabeledDataset labeled;
  std::map<std::string, std::string> hashes;
  std::string digest;
};

LoadedData load_labeled(const std::string& dir) {
  LoadedData d;
  if (!fs::is_directory(dir)) throw pipeline::DataError("dataset directory '" + dir + "' does not exist");
  d.raw = pipeline::load_dataset(dir);
  d.labeled = labels::build_labeled_dataset(d.raw, d.raw.ratings);
  d.hashes = hash_tree(dir);
  d.digest = tree_digest(d.hashes);
  return d;
}

/// Owns one runs/<run-id>/ directory and its manifest.
class Run {
 public:
  Run(const RunFlags& flags, std::string command, const std::vector<std::string>& args) {
    std::string id = flags.run_id;
    if (id.empty()) {
      std::string stamp = utc_now();
      std::erase_if(stamp, [](char c) { return c == ':' || c == '-'; });
      const std::string base = command + "-" + stamp;
      id = base;
      for (int k = 2; fs::exists(fs::path(flags.runs_dir) / id); ++k) id = base + "-" + std::to_string(k);
    }
    path_ = fs::path(flags.runs_dir) / id;
    manifest_.command = std::move(command);
    manifest_.arguments = args;
    manifest_.started_at = utc_now();
  }

  /// Creates the directory. With `reuse` an existing run directory is kept (resume).
  void open(bool reuse = false) {
    if (fs::exists(path_ / "run_manifest.json") && !reuse) {
      throw std::invalid_argument("run directory " + path_.string() + " already exists");
    }
    fs::create_directories(path_);
    save();
  }

  const fs::path& path() const { return path_; }
  RunManifest& manifest() { return manifest_; }

  void add_inputs(const std::string& prefix, const LoadedData& data) {
    manifest_.input_hashes[prefix] = data.digest;
    for (const auto& [file, hash] : data.hashes) manifest_.input_hashes[prefix + "/" + file] = hash;
  }

  void finish() {
    manifest_.status = "ok";
    manifest_.finished_at = utc_now();
    save();
  }

  void fail(const std::string& message) {
    if (!fs::exists(path_)) return;
    manifest_.status = "failed";
    manifest_.error = message;
    manifest_.finished_at = utc_now();
    save();
  }

 private:
  void save() const { harness::write_file_atomic(path_ / "run_manifest.json", to_json(manifest_).dump(2) + "\n"); }

  fs::path path_;
  RunManifest manifest_;
};

std::string percent(double share) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * share;
  std::string text = s.str();
  if (text.ends_with(".0")) text.resize(text.size() - 2);
  return text + "%";
}

// --- subcommands ----------------------------------------------------------------

struct SynthFlags {
  std::optional<std::string> spec_file, preset, exercises;
  std::string out;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> subjects, repetitions, imus, min_length, max_length, windows;
  std::optional<double> class_effect, confound, noise, adjacent, two_step;
  bool balanced = false;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  json j = json::object();
  if (f.spec_file) j = json::parse(harness::read_file(*f.spec_file));
  if (f.preset) j["preset"] = *f.preset;
  if (f.seed) j["seed"] = *f.seed;
  if (f.subjects) j["subjects"] = *f.subjects;
  if (f.repetitions) j["repetitions"] = *f.repetitions;
  if (f.imus) j["imus"] = *f.imus;
  if (f.min_length) j["min_length"] = *f.min_length;
  if (f.max_length) j["max_length"] = *f.max_length;
  if (f.windows) j["windows"] = *f.windows;
  if (f.class_effect) j["class_effect"] = *f.class_effect;
  if (f.confound) j["subject_confound"] = *f.confound;
  if (f.noise) j["noise"] = *f.noise;
  if (f.adjacent) j["rater_adjacent_error"] = *f.adjacent;
  if (f.two_step) j["rater_two_step_error"] = *f.two_step;
  if (f.balanced) j["balanced"] = true;
  if (f.exercises) {
    json list = json::array();
    std::stringstream s(*f.exercises);
    for (std::string e; std::getline(s, e, ',');) list.push_back(e);
    j["exercises"] = list;
  }
  const synthgen::GeneratorSpec spec = synthgen::generator_spec_from_json(j);

  const fs::path target(f.out);
  if (fs::exists(target) && !fs::is_empty(target) && !f.force) {
    throw std::invalid_argument("output directory " + f.out + " is not empty (use --force to replace it)");
  }
  fs::path staging = target;
  staging += ".partial";
  fs::remove_all(staging);
  try {
    synthgen::write_generated(synthgen::generate(spec), spec, staging);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::remove_all(target);
  fs::rename(staging, target);
  const auto hashes = hash_tree(target);
  const auto loaded = pipeline::load_dataset(target);
  out << "wrote " << loaded.repetitions.size() << " repetitions of " << loaded.manifest.subjects.size()
      << " subjects to " << target.string() << "\n";
  out << "dataset sha256: " << tree_digest(hashes) << "\n";
  return kOk;
}

int cmd_validate(const std::string& data, std::ostream& out) {
  const LoadedData d = load_labeled(data);
  for (const auto& rep : d.raw.repetitions) rep.validate();
  std::map<std::string, int> per_group;
  for (const auto& rep : d.raw.repetitions) ++per_group[labels::histogram_key(rep.exercise, rep.side)];
  out << "ok: " << d.raw.repetitions.size() << " repetitions, " << d.raw.manifest.subjects.size() << " subjects, "
      << d.raw.manifest.layout.imu_ids.size() << " IMUs, max_length " << d.raw.manifest.max_length << ", windows "
      << d.raw.manifest.windows << ", " << d.raw.ratings.size() << " ratings\n";
  for (const auto& [group, n] : per_group) out << "  " << group << ": " << n << "\n";
  out << "labeled: " << d.labeled.dataset.repetitions.size() << ", excluded (no majority): "
      << d.labeled.excluded_no_majority.size() << ", unrated: " << d.labeled.excluded_unrated.size() << "\n";
  out << "dataset sha256: " << d.digest << "\n";
  return kOk;
}

int cmd_labels(const std::string& data, Run& run, std::ostream& out) {
  const LoadedData d = load_labeled(data);
  run.add_inputs("data", d);
  run.manifest().config = {{"data", data}};
  run.open();
  const double ordinal = labels::krippendorff_alpha(d.raw.ratings, labels::DistanceMetric::ordinal);
  const double nominal = labels::krippendorff_alpha(d.raw.ratings, labels::DistanceMetric::nominal);
  labels::Index rated = 0;
  for (const auto& [cat, n] : d.labeled.category_counts) rated += n;
  out << "krippendorff alpha (ordinal): " << std::setprecision(4) << ordinal << "\n";
  out << "krippendorff alpha (nominal): " << std::setprecision(4) << nominal << "\n";
  // Same statistic restricted to the repetitions that keep a majority label.
  std::set<std::string> retained;
  for (const auto& rep : d.labeled.dataset.repetitions) retained.insert(rep.id);
  std::vector<labels::RatingRecord> kept;
  for (const auto& r : d.raw.ratings)
    if (retained.count(r.repetition_id)) kept.push_back(r);
  json retained_alpha = nullptr;
  if (retained.size() >= 2) {
    retained_alpha = labels::krippendorff_alpha(kept, labels::DistanceMetric::ordinal);
    out << "krippendorff alpha (ordinal, retained repetitions): " << std::setprecision(4)
        << retained_alpha.get<double>() << "\n";
  }
  json shares = json::object();
  for (auto cat : labels::kAgreements) {
    const auto it = d.labeled.category_counts.find(cat);
    const labels::Index n = it == d.labeled.category_counts.end() ? 0 : it->second;
    const double share = rated > 0 ? static_cast<double>(n) / static_cast<double>(rated) : 0.0;
    std::string name = labels::to_string(cat);
    if (name.starts_with("majority_")) name = name.substr(9);
    std::replace(name.begin(), name.end(), '_', ' ');
    out << name << ": " << percent(share) << " (" << n << ")\n";
    shares[labels::to_string(cat)] = {{"count", n}, {"share", share}};
  }
  json histograms = json::object();
  for (const auto& [key, h] : d.labeled.label_histograms) {
    out << key << " labels 1/2/3: " << h[0] << " / " << h[1] << " / " << h[2] << "\n";
    histograms[key] = h;
  }
  std::string csv = "repetition_id,subject,exercise,side,label\n";
  for (const auto& rep : d.labeled.dataset.repetitions) {
    csv += rep.id + "," + rep.subject_id + "," + pipeline::to_string(rep.exercise) + "," + pipeline::to_string(rep.side) +
           "," + std::to_string(*rep.final_label) + "\n";
  }
  harness::write_file_atomic(run.path() / "labels.csv", csv);
  const json summary{{"alpha_ordinal", ordinal},
                     {"alpha_nominal", nominal},
                     {"alpha_ordinal_retained", retained_alpha},
                     {"categories", shares},
                     {"label_histograms", histograms},
                     {"excluded_no_majority", d.labeled.excluded_no_majority},
                     {"excluded_unrated", d.labeled.excluded_unrated}};
  harness::write_file_atomic(run.path() / "labels.json", summary.dump(2) + "\n");
  out << "final labels: " << (run.path() / "labels.csv").string() << "\n";
  return kOk;
}

json train_config_json(const std::string& data, const std::string& selection, const arch::ModelConfig& config,
                       const harness::ExperimentOptions& options) {
  return {{"data", data}, {"selection", selection}, {"model", arch::to_json(config)}, {"options", to_json(options)}};
}

int cmd_train(const std::string& data, const std::string& selection, int fold_index, const ModelFlags& mf,
              const TrainFlags& tf, Run& run, std::ostream& out) {
  const LoadedData d = load_labeled(data);
  const auto selected = harness::select_repetitions(d.labeled.dataset, selection);
  const auto config = model_config(mf, d.raw.manifest.windows);
  const auto options = experiment_options(tf);
  if (fold_index < 0 || fold_index >= options.folds) throw std::invalid_argument("--fold must lie in [0, --folds)");
  run.add_inputs("data", d);
  json cfg = train_config_json(data, selection, config, options);
  cfg["fold"] = fold_index;
  run.manifest().config = cfg;
  run.manifest().seeds = {{"experiment", options.seed}, {"fold", nn::mix_seed(options.seed, fold_index + 1)}};
  run.open();

  const auto prepared = harness::prepare_dataset(selected);
  const auto plan = harness::make_losocv(harness::sample_keys(selected), options.folds, options.seed,
                                         {options.stratified, 0.2});
  const auto& fold = plan.folds[static_cast<std::size_t>(fold_index)];
  const auto pf = harness::prepare_fold(prepared, fold, config.windows);
  harness::TrainOptions to;
  to.epochs = options.epochs;
  to.patience = options.patience;
  to.learning_rate = options.learning_rate;
  to.seed = nn::mix_seed(options.seed, static_cast<std::uint64_t>(fold_index) + 1);
  auto trained = harness::train(config, prepared.layout, pf, to);

  harness::ExperimentReport report;
  report.selection = selection;
  report.config = config;
  report.options = options;
  harness::FoldResult r;
  r.fold = fold_index;
  r.test_subject = fold.test_subject;
  r.train = harness::evaluate(trained.network, pf.train);
  if (!pf.validation.empty()) r.validation = harness::evaluate(trained.network, pf.validation);
  r.test = harness::evaluate(trained.network, pf.test);
  r.history = trained.history;
  r.best_epoch = trained.best_epoch;
  r.stopped_early = trained.stopped_early;
  r.missing_classes = fold.missing_classes;
  r.scaler_ids = pf.scaler_ids;
  report.folds.push_back(r);

  harness::write_file_atomic(run.path() / "config.json", cfg.dump(2) + "\n");
  harness::write_file_atomic(run.path() / "split_plan.json", to_json(plan, prepared.ids()).dump(2) + "\n");
  harness::write_file_atomic(run.path() / "history.csv", harness::history_csv(report));
  json metrics = to_json(r);
  metrics["scaler"] = {{"acc_min", pf.scaler.acc_min},
                       {"acc_max", pf.scaler.acc_max},
                       {"gyr_min", pf.scaler.gyr_min},
                       {"gyr_max", pf.scaler.gyr_max}};
  harness::write_file_atomic(run.path() / "metrics.json", metrics.dump(2) + "\n");
  nn::save_checkpoint<double>(run.path() / "model.ckpt", trained.network, nullptr, nullptr, cfg);

  out << "fold " << fold_index << " (test subject " << fold.test_subject << "), best epoch " << r.best_epoch << " of "
      << r.history.size() << "\n";
  out << std::fixed << std::setprecision(3) << "macro F1  train " << r.train.macro_f1 << "  validation "
      << r.validation.macro_f1 << "  test " << r.test.macro_f1 << "\n";
  out << "run: " << run.path().string() << "\n";
  return kOk;
}

int cmd_eval(const std::string& train_run, std::optional<std::string> data_override, Run& run, std::ostream& out) {
  const fs::path source(train_run);
  const json cfg = json::parse(harness::read_file(source / "config.json"));
  if (!cfg.contains("fold")) throw std::invalid_argument(train_run + " is not a train run");
  const std::string data = data_override.value_or(cfg.at("data").get<std::string>());
  const LoadedData d = load_labeled(data);
  const std::string selection = cfg.at("selection").get<std::string>();
  const auto config = arch::model_config_from_json(cfg.at("model"));
  const auto options = harness::experiment_options_from_json(cfg.at("options"));
  const int fold_index = cfg.at("fold").get<int>();
  run.add_inputs("data", d);
  run.manifest().input_hashes["model.ckpt"] = sha256_file(source / "model.ckpt");
  run.manifest().config = {{"train_run", train_run}, {"data", data}};
  run.manifest().seeds = {{"experiment", options.seed}};
  run.open();

  const auto source_manifest = run_manifest_from_json(json::parse(harness::read_file(source / "run_manifest.json")));
  const auto it = source_manifest.input_hashes.find("data");
  if (it != source_manifest.input_hashes.end() && it->second != d.digest) {
    warn("dataset " + data + " differs from the one the model was trained on");
  }
  const auto selected = harness::select_repetitions(d.labeled.dataset, selection);
  const auto prepared = harness::prepare_dataset(selected);
  const auto plan = harness::make_losocv(harness::sample_keys(selected), options.folds, options.seed,
                                         {options.stratified, 0.2});
  const auto pf = harness::prepare_fold(prepared, plan.folds.at(static_cast<std::size_t>(fold_index)), config.windows);
  auto loaded = nn::load_checkpoint<double>(source / "model.ckpt");
  json result = json::object();
  out << std::fixed << std::setprecision(3);
  for (const auto& [name, samples] : {std::pair{"train", &pf.train}, std::pair{"validation", &pf.validation},
                                      std::pair{"test", &pf.test}}) {
    if (samples->empty()) continue;
    const auto m = harness::evaluate(loaded.network, *samples);
    result[name] = to_json(m);
    out << name << ": macro F1 " << m.macro_f1 << ", accuracy " << m.accuracy << ", loss " << m.loss << "\n";
    if (std::string(name) == "test") {
      out << "confusion (rows truth 1..3, columns predicted):\n";
      for (int t = 0; t < 3; ++t) {
        out << "  " << m.confusion(t, 0) << " " << m.confusion(t, 1) << " " << m.confusion(t, 2) << "\n";
      }
    }
  }
  harness::write_file_atomic(run.path() / "eval.json", result.dump(2) + "\n");
  out << "run: " << run.path().string() << "\n";
  return kOk;
}

int cmd_experiment(const std::string& data, const std::string& selection, const ModelFlags& mf, const TrainFlags& tf,
                   Run& run, std::ostream& out) {
  const LoadedData d = load_labeled(data);
  const auto selected = harness::select_repetitions(d.labeled.dataset, selection);
  const auto config = model_config(mf, d.raw.manifest.windows);
  const auto options = experiment_options(tf);
  run.add_inputs("data", d);
  run.manifest().config = train_config_json(data, selection, config, options);
  json fold_seeds = json::array();
  for (int f = 0; f < options.folds; ++f) fold_seeds.push_back(nn::mix_seed(options.seed, f + 1));
  run.manifest().seeds = {{"experiment", options.seed}, {"folds", fold_seeds}};
  run.open();
  const auto report = harness::run_experiment(selected, config, options, selection, [&](const harness::FoldResult& f) {
    out << "fold " << f.fold << " (" << f.test_subject << ") done: test macro F1 " << std::fixed << std::setprecision(3)
        << f.test.macro_f1 << (f.diverged ? " [diverged]" : "") << "\n";
  });
  harness::write_experiment(run.path(), report);
  out << harness::render_summary({harness::summary_row(report)});
  out << "run: " << run.path().string() << "\n";
  return kOk;
}

struct SweepFlags {
  std::size_t n = 120;
  bool exhaustive = false;
  int folds = 5;
  std::uint64_t seed = 0;
  int epochs = 15;
  int patience = 15;
  double learning_rate = 1e-4;
  int workers = 1;
  bool resume = false;
  bool no_stratify = false;
  std::size_t stop_after = 0;
  std::optional<std::string> space_file;
};

int cmd_sweep(const std::string& data, const std::string& selection, const ModelFlags& mf, const SweepFlags& sf,
              Run& run, std::ostream& out) {
  const LoadedData d = load_labeled(data);
  const auto selected = harness::select_repetitions(d.labeled.dataset, selection);
  sweep::SearchSpace space;
  if (sf.space_file) {
    const json j = json::parse(harness::read_file(*sf.space_file));
    space = sweep::search_space_from_json(j.contains("space") ? j.at("space") : j);
  }
  sweep::SweepOptions o;
  o.n = sf.n;
  o.exhaustive = sf.exhaustive;
  o.folds = sf.folds;
  o.seed = sf.seed;
  o.epochs = sf.epochs;
  o.patience = sf.patience;
  o.learning_rate = sf.learning_rate;
  o.workers = sf.workers;
  o.stratified = !sf.no_stratify;
  o.base = model_config(mf, d.raw.manifest.windows);
  o.stop_after = sf.stop_after;
  run.add_inputs("data", d);
  run.manifest().config = {{"data", data}, {"selection", selection}, {"space", to_json(space)}, {"options", to_json(o)}};
  run.manifest().seeds = {{"sweep", o.seed}};
  run.open(sf.resume);
  const auto result = sweep::run_sweep(selected, space, o, run.path(), sf.resume);
  out << sweep::render_leaderboard(result.leaderboard, 10);
  out << result.leaderboard.size() << " of " << result.total << " configurations scored"
      << (result.complete() ? "" : " (incomplete; rerun with --resume)") << "\n";
  out << "run: " << run.path().string() << "\n";
  return kOk;
}

int cmd_report(std::vector<std::string> paths, const std::string& runs_dir, std::size_t top,
               const std::optional<std::string>& out_file, std::ostream& out) {
  if (paths.empty()) {
    if (!fs::is_directory(runs_dir)) throw pipeline::DataError("runs directory " + runs_dir + " does not exist");
    for (const auto& e : fs::directory_iterator(runs_dir)) {
      if (e.is_directory()) paths.push_back(e.path().string());
    }
    std::sort(paths.begin(), paths.end());
  }
  std::vector<harness::SummaryRow> rows;
  std::string sweeps;
  for (const auto& p : paths) {
    const fs::path dir(p);
    if (fs::exists(dir / "report.csv")) {
      for (auto& r : harness::read_summary(dir)) rows.push_back(std::move(r));
    } else if (fs::exists(dir / "leaderboard.csv")) {
      arch::ModelConfig base;
      if (fs::exists(dir / "sweep.json")) {
        base = sweep::sweep_options_from_json(json::parse(harness::read_file(dir / "sweep.json")).at("options")).base;
      }
      sweeps += "Sweep " + dir.filename().string() + "\n" +
                sweep::render_leaderboard(sweep::read_leaderboard(dir / "leaderboard.csv", base), top) + "\n";
    } else if (!fs::exists(dir)) {
      throw pipeline::DataError("run directory " + p + " does not exist");
    }
  }
  std::string text;
  if (!rows.empty()) text += harness::render_summary(rows);
  if (!sweeps.empty()) text += (text.empty() ? "" : "\n") + sweeps;
  if (text.empty()) text = "no experiment or sweep results found\n";
  out << text;
  if (out_file) harness::write_file_atomic(*out_file, text);
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep-learning rating of functional movement screening exercises from IMU data", "fmsnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthFlags synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset with simulated raters");
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--spec", synth.spec_file, "Generator specification JSON (synthgen.json)");
  s->add_option("--preset", synth.preset, "Label prior preset: skewed");
  s->add_option("--seed", synth.seed, "Generator seed");
  s->add_option("--subjects", synth.subjects, "Number of subjects");
  s->add_option("--repetitions", synth.repetitions, "Repetitions per subject, exercise and side");
  s->add_option("--exercises", synth.exercises, "Comma-separated exercises (DS,HS,IL,TSP)");
  s->add_option("--imus", synth.imus, "Number of IMUs");
  s->add_option("--min-length", synth.min_length, "Shortest repetition in samples");
  s->add_option("--max-length", synth.max_length, "Longest repetition in samples");
  s->add_option("--windows", synth.windows, "Windows per repetition recorded in the manifest");
  s->add_option("--class-effect", synth.class_effect, "Strength of the rating-dependent deformation");
  s->add_option("--confound", synth.confound, "Strength of per-subject channel offsets");
  s->add_option("--noise", synth.noise, "Gaussian noise in units of the channel scale");
  s->add_option("--adjacent-error", synth.adjacent, "Rater probability of an adjacent score");
  s->add_option("--two-step-error", synth.two_step, "Rater probability of a two-step score");
  s->add_flag("--balanced", synth.balanced, "Cycle ratings 1, 2, 3 instead of drawing from priors");
  s->add_flag("--force", synth.force, "Replace a non-empty output directory");

  std::string data;
  auto* v = app.add_subcommand("validate", "Check a dataset directory");
  v->add_option("--data", data, "Dataset directory")->required();

  RunFlags label_run;
  auto* l = app.add_subcommand("labels", "Print rater agreement and write majority-vote labels");
  l->add_option("--data", data, "Dataset directory")->required();
  add_run_flags(l, label_run);

  std::string selection = "DS";
  int fold = 0;
  ModelFlags train_model;
  TrainFlags train_flags;
  RunFlags train_run;
  auto* t = app.add_subcommand("train", "Train and evaluate one LOSOCV fold; saves the model checkpoint");
  t->add_option("--data", data, "Dataset directory")->required();
  t->add_option("--dataset", selection, "DS, TSP, HS-left, HS-right, HS-combined, IL-left, IL-right or IL-combined")
      ->capture_default_str();
  t->add_option("--fold", fold, "Fold index in [0, folds)")->capture_default_str();
  add_model_flags(t, train_model);
  add_train_flags(t, train_flags, false);
  add_run_flags(t, train_run);

  std::string eval_source;
  std::optional<std::string> eval_data;
  RunFlags eval_run;
  auto* e = app.add_subcommand("eval", "Re-evaluate the checkpoint of a train run on its fold");
  e->add_option("--run", eval_source, "Train run directory")->required();
  e->add_option("--data", eval_data, "Dataset directory (default: the one recorded by the train run)");
  add_run_flags(e, eval_run);

  ModelFlags exp_model;
  TrainFlags exp_flags;
  RunFlags exp_run;
  auto* x = app.add_subcommand("experiment", "k-fold LOSOCV on a dataset selection with mean and std of macro F1");
  x->add_option("--data", data, "Dataset directory")->required();
  x->add_option("--dataset", selection, "DS, TSP, HS-left, HS-right, HS-combined, IL-left, IL-right or IL-combined")
      ->capture_default_str();
  add_model_flags(x, exp_model);
  add_train_flags(x, exp_flags, true);
  add_run_flags(x, exp_run);

  ModelFlags sweep_model;
  SweepFlags sweep_flags;
  RunFlags sweep_run;
  auto* w = app.add_subcommand("sweep", "Random search over the hyperparameter grid with a LOSOCV leaderboard");
  w->add_option("--data", data, "Dataset directory")->required();
  w->add_option("--dataset", selection, "Dataset selection to search on")->capture_default_str();
  w->add_option("--n", sweep_flags.n, "Sampled configurations")->capture_default_str();
  w->add_flag("--exhaustive", sweep_flags.exhaustive, "Score every grid combination once instead of sampling");
  w->add_option("--folds", sweep_flags.folds, "LOSOCV folds per configuration")->capture_default_str();
  w->add_option("--seed", sweep_flags.seed, "Seed for sampling and for every experiment")->capture_default_str();
  w->add_option("--epochs", sweep_flags.epochs, "Epoch budget per fold")->capture_default_str();
  w->add_option("--patience", sweep_flags.patience, "Early-stopping patience")->capture_default_str();
  w->add_option("--lr", sweep_flags.learning_rate, "Adam learning rate")->capture_default_str();
  w->add_option("--workers", sweep_flags.workers, "Parallel worker threads")->capture_default_str();
  w->add_flag("--resume", sweep_flags.resume, "Continue the sweep in --run-id");
  w->add_flag("--no-stratify", sweep_flags.no_stratify, "Draw validation shares without stratification");
  w->add_option("--stop-after", sweep_flags.stop_after, "Stop after this many new configurations (0 = all)");
  w->add_option("--space", sweep_flags.space_file, "Search space JSON (sweep.json or its \"space\" object)");
  add_model_flags(w, sweep_model);
  add_run_flags(w, sweep_run);

  std::vector<std::string> report_paths;
  std::string report_runs_dir;
  std::size_t top = 10;
  std::optional<std::string> report_out;
  auto* r = app.add_subcommand("report", "Render experiment and sweep summaries from run directories");
  r->add_option("runs", report_paths, "Run directories (default: every run under --runs-dir)");
  r->add_option("--top", top, "Leaderboard rows per sweep (0 = all)")->capture_default_str();
  r->add_option("--out", report_out, "Also write the rendered text to this file");
  {
    const char* env = std::getenv(kRunsDirEnv);
    report_runs_dir = env && *env ? env : "runs";
  }
  r->add_option("--runs-dir", report_runs_dir, std::string("Directory scanned when no runs are given (default $") +
                                                   kRunsDirEnv + " or ./runs)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Run* active = nullptr;
  std::optional<Run> run;
  auto start = [&](const RunFlags& flags, const std::string& name) -> Run& {
    run.emplace(flags, name, args);
    active = &*run;
    return *run;
  };
  auto fail = [&](const std::string& message) {
    if (active) {
      try {
        active->fail(message);
      } catch (...) {
      }
    }
    err << "error: " << message << "\n";
  };
  try {
    int code = kOk;
    if (*s) {
      code = cmd_synth(synth, out);
    } else if (*v) {
      code = cmd_validate(data, out);
    } else if (*l) {
      code = cmd_labels(data, start(label_run, "labels"), out);
    } else if (*t) {
      code = cmd_train(data, selection, fold, train_model, train_flags, start(train_run, "train"), out);
    } else if (*e) {
      code = cmd_eval(eval_source, eval_data, start(eval_run, "eval"), out);
    } else if (*x) {
      code = cmd_experiment(data, selection, exp_model, exp_flags, start(exp_run, "experiment"), out);
    } else if (*w) {
      code = cmd_sweep(data, selection, sweep_model, sweep_flags, start(sweep_run, "sweep"), out);
    } else if (*r) {
      code = cmd_report(report_paths, report_runs_dir, top, report_out, out);
    }
    if (active && fs::exists(active->path())) active->finish();
    return code;
  } catch (const pipeline::DataError& ex) {
    fail(ex.what());
    return kDataError;
  } catch (const nn::NumericError& ex) {
    fail(ex.what());
    return kNumericError;
  } catch (const json::exception& ex) {
    fail(std::string("malformed JSON: ") + ex.what());
    return kDataError;
  } catch (const std::invalid_argument& ex) {
    fail(ex.what());
    return kUsage;
  } catch (const std::exception& ex) {
    fail(ex.what());
    return kFailure;
  }
}

}  // namespace fmsnet::cli
