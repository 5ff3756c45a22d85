#include "fmsnet/harness/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fmsnet/nn/random.hpp"

namespace fmsnet::harness {

pipeline::Dataset select_repetitions(const pipeline::Dataset& labeled, std::string_view selection) {
  using pipeline::Exercise;
  using pipeline::Side;
  const auto dash = selection.find('-');
  const std::string_view exercise_name = selection.substr(0, dash);
  const std::string_view side_name = dash == std::string_view::npos ? "" : selection.substr(dash + 1);
  bool known = false;
  for (auto s : kSelections) known = known || s == selection;
  if (!known) throw std::invalid_argument("unknown dataset selection '" + std::string(selection) + "'");
  const Exercise exercise = pipeline::exercise_from_string(exercise_name);

  pipeline::Dataset out;
  out.manifest = labeled.manifest;
  out.alignment = labeled.alignment;
  for (const auto& rep : labeled.repetitions) {
    if (rep.exercise != exercise) continue;
    if (side_name == "left" && rep.side != Side::left) continue;
    if (side_name == "right" && rep.side != Side::right) continue;
    out.repetitions.push_back(rep);
  }
  if (out.repetitions.empty()) {
    throw std::invalid_argument("dataset selection '" + std::string(selection) + "' matches no labeled repetitions");
  }
  for (const auto& r : labeled.ratings) {
    if (out.find(r.repetition_id)) out.ratings.push_back(r);
  }
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

ExperimentReport run_experiment(const pipeline::Dataset& selected, const arch::ModelConfig& config,
                                const ExperimentOptions& options, std::string selection, const FoldCallback& on_fold) {
  config.validate();
  if (selected.repetitions.empty()) throw std::invalid_argument("experiment needs at least one labeled repetition");
  ExperimentReport report;
  report.selection = std::move(selection);
  report.config = config;
  report.options = options;
  const PreparedDataset data = prepare_dataset(selected);
  report.ids = data.ids();
  report.plan = make_losocv(sample_keys(selected), options.folds, options.seed,
                            SplitOptions{options.stratified, 0.2});
  report.folds.resize(report.plan.folds.size());

  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::vector<std::exception_ptr> errors(report.plan.folds.size());
  auto worker = [&] {
    for (std::size_t f = next++; f < report.plan.folds.size(); f = next++) {
      try {
        const Fold& fold = report.plan.folds[f];
        const PreparedFold prepared = prepare_fold(data, fold, config.windows);
        TrainOptions topt;
        topt.epochs = options.epochs;
        topt.patience = options.patience;
        topt.learning_rate = options.learning_rate;
        topt.seed = nn::mix_seed(options.seed, f + 1);
        topt.abort_on_divergence = options.abort_on_divergence;
        TrainResult trained = train(config, data.layout, prepared, topt);

        FoldResult r;
        r.fold = static_cast<int>(f);
        r.test_subject = fold.test_subject;
        r.train = evaluate(trained.network, prepared.train);
        if (!prepared.validation.empty()) r.validation = evaluate(trained.network, prepared.validation);
        r.test = evaluate(trained.network, prepared.test);
        for (const auto& h : trained.history) r.train.loss_curve.push_back(h.train_loss);
        for (const auto& h : trained.history) r.validation.loss_curve.push_back(h.val_loss);
        r.history = std::move(trained.history);
        r.best_epoch = trained.best_epoch;
        r.stopped_early = trained.stopped_early;
        r.diverged = trained.diverged;
        r.divergence = trained.divergence;
        r.missing_classes = fold.missing_classes;
        r.scaler_ids = prepared.scaler_ids;
        std::lock_guard lock(mutex);
        report.folds[f] = std::move(r);
        if (on_fold) on_fold(report.folds[f]);
      } catch (...) {
        std::lock_guard lock(mutex);
        errors[f] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(report.plan.folds.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> tr, va, te;
  for (const auto& f : report.folds) {
    tr.push_back(f.train.macro_f1);
    va.push_back(f.validation.macro_f1);
    te.push_back(f.test.macro_f1);
    report.diverged = report.diverged || f.diverged;
  }
  report.train_f1 = mean_std(tr);
  report.validation_f1 = mean_std(va);
  report.test_f1 = mean_std(te);
  return report;
}

ExperimentReport run_selection(const pipeline::Dataset& labeled, std::string_view selection,
                               const arch::ModelConfig& config, const ExperimentOptions& options) {
  return run_experiment(select_repetitions(labeled, selection), config, options, std::string(selection));
}

nlohmann::json to_json(const FoldResult& f) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : f.history) history.push_back(to_json(h));
  return {{"fold", f.fold},
          {"test_subject", f.test_subject},
          {"train", to_json(f.train)},
          {"validation", to_json(f.validation)},
          {"test", to_json(f.test)},
          {"best_epoch", f.best_epoch},
          {"epochs_run", f.history.size()},
          {"stopped_early", f.stopped_early},
          {"diverged", f.diverged},
          {"divergence", f.divergence},
          {"missing_classes", f.missing_classes}};
}

nlohmann::json to_json(const ExperimentOptions& o) {
  return {{"folds", o.folds},
          {"epochs", o.epochs},
          {"patience", o.patience},
          {"learning_rate", o.learning_rate},
          {"seed", o.seed},
          {"workers", o.workers},
          {"stratified", o.stratified},
          {"abort_on_divergence", o.abort_on_divergence}};
}

ExperimentOptions experiment_options_from_json(const nlohmann::json& j) {
  ExperimentOptions o;
  o.folds = j.value("folds", o.folds);
  o.epochs = j.value("epochs", o.epochs);
  o.patience = j.value("patience", o.patience);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.seed = j.value("seed", o.seed);
  o.workers = j.value("workers", o.workers);
  o.stratified = j.value("stratified", o.stratified);
  o.abort_on_divergence = j.value("abort_on_divergence", o.abort_on_divergence);
  return o;
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f));
  auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
  return {{"selection", r.selection},
          {"config", arch::to_json(r.config)},
          {"options", to_json(r.options)},
          {"summary", {{"train_macro_f1", ms(r.train_f1)},
                       {"validation_macro_f1", ms(r.validation_f1)},
                       {"test_macro_f1", ms(r.test_f1)}}},
          {"diverged", r.diverged},
          {"folds", folds}};
}

}  // namespace fmsnet::harness
