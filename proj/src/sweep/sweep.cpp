#include "fmsnet/sweep/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fmsnet/harness/run_io.hpp"
#include "fmsnet/nn/random.hpp"
#include "fmsnet/pipeline/dataset_io.hpp"

namespace fmsnet::sweep {

namespace fs = std::filesystem;

std::size_t SearchSpace::size() const {
  return activations.size() * cnn_blocks.size() * schemes.size() * regularizations.size() * lstm_layers.size() *
         batch_sizes.size();
}

void SearchSpace::validate() const {
  if (activations.empty() || cnn_blocks.empty() || schemes.empty() || regularizations.empty() ||
      lstm_layers.empty() || batch_sizes.empty()) {
    throw std::invalid_argument("search space has an empty axis");
  }
  arch::ModelConfig c;
  for (auto a : activations) {
    c.activation = a;
    c.validate();
  }
  c = {};
  for (int b : cnn_blocks) {
    c.cnn_blocks = b;
    c.validate();
  }
  c = {};
  for (int l : lstm_layers) {
    c.lstm_layers = l;
    c.validate();
  }
  c = {};
  for (int b : batch_sizes) {
    c.batch_size = b;
    c.validate();
  }
}

nlohmann::json to_json(const SearchSpace& s) {
  nlohmann::json acts = nlohmann::json::array(), schemes = nlohmann::json::array(), regs = nlohmann::json::array();
  for (auto a : s.activations) acts.push_back(nn::to_string(a));
  for (auto k : s.schemes) schemes.push_back(arch::to_string(k));
  for (auto r : s.regularizations) regs.push_back(arch::to_string(r));
  return {{"activation", acts},       {"cnn_blocks", s.cnn_blocks},   {"scheme", schemes},
          {"regularization", regs},   {"lstm_layers", s.lstm_layers}, {"batch_size", s.batch_sizes}};
}

SearchSpace search_space_from_json(const nlohmann::json& j) {
  SearchSpace s;
  if (j.contains("activation")) {
    s.activations.clear();
    for (const auto& a : j.at("activation")) s.activations.push_back(nn::activation_from_string(a.get<std::string>()));
  }
  if (j.contains("cnn_blocks")) s.cnn_blocks = j.at("cnn_blocks").get<std::vector<int>>();
  if (j.contains("scheme")) {
    s.schemes.clear();
    for (const auto& k : j.at("scheme")) s.schemes.push_back(arch::scheme_from_string(k.get<std::string>()));
  }
  if (j.contains("regularization")) {
    s.regularizations.clear();
    for (const auto& r : j.at("regularization")) {
      s.regularizations.push_back(arch::regularization_from_string(r.get<std::string>()));
    }
  }
  if (j.contains("lstm_layers")) s.lstm_layers = j.at("lstm_layers").get<std::vector<int>>();
  if (j.contains("batch_size")) s.batch_sizes = j.at("batch_size").get<std::vector<int>>();
  s.validate();
  return s;
}

std::vector<arch::ModelConfig> sample_configs(const SearchSpace& space, std::size_t n, std::uint64_t seed,
                                              const arch::ModelConfig& base, bool exhaustive) {
  space.validate();
  std::vector<arch::ModelConfig> out;
  if (exhaustive) {
    for (auto a : space.activations)
      for (int b : space.cnn_blocks)
        for (auto k : space.schemes)
          for (auto r : space.regularizations)
            for (int l : space.lstm_layers)
              for (int bs : space.batch_sizes) {
                arch::ModelConfig c = base;
                c.activation = a;
                c.cnn_blocks = b;
                c.scheme = k;
                c.regularization = r;
                c.lstm_layers = l;
                c.batch_size = bs;
                out.push_back(c);
              }
    return out;
  }
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  nn::Rng rng(nn::mix_seed(seed, 0));
  auto pick = [&](const auto& axis) { return axis[rng.below(axis.size())]; };
  for (std::size_t i = 0; i < n; ++i) {
    arch::ModelConfig c = base;
    c.activation = pick(space.activations);
    c.cnn_blocks = pick(space.cnn_blocks);
    c.scheme = pick(space.schemes);
    c.regularization = pick(space.regularizations);
    c.lstm_layers = pick(space.lstm_layers);
    c.batch_size = pick(space.batch_sizes);
    out.push_back(c);
  }
  return out;
}

nlohmann::json to_json(const SweepOptions& o) {
  return {{"n", o.n},
          {"exhaustive", o.exhaustive},
          {"folds", o.folds},
          {"epochs", o.epochs},
          {"patience", o.patience},
          {"learning_rate", o.learning_rate},
          {"seed", o.seed},
          {"stratified", o.stratified},
          {"base", arch::to_json(o.base)}};
}

SweepOptions sweep_options_from_json(const nlohmann::json& j) {
  SweepOptions o;
  o.n = j.value("n", o.n);
  o.exhaustive = j.value("exhaustive", o.exhaustive);
  o.folds = j.value("folds", o.folds);
  o.epochs = j.value("epochs", o.epochs);
  o.patience = j.value("patience", o.patience);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.seed = j.value("seed", o.seed);
  o.stratified = j.value("stratified", o.stratified);
  if (j.contains("base")) o.base = arch::model_config_from_json(j.at("base"));
  return o;
}

void rank_entries(std::vector<SweepEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const SweepEntry& a, const SweepEntry& b) {
    if (a.validation_mean != b.validation_mean) return a.validation_mean > b.validation_mean;
    if (a.train_mean != b.train_mean) return a.train_mean > b.train_mean;
    return a.index < b.index;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = i + 1;
}

SweepEntry entry_from_report(std::size_t index, const harness::ExperimentReport& report) {
  SweepEntry e;
  e.index = index;
  e.config = report.config;
  for (const auto& f : report.folds) {
    e.train_f1.push_back(f.train.macro_f1);
    e.validation_f1.push_back(f.validation.macro_f1);
    e.test_f1.push_back(f.test.macro_f1);
  }
  e.train_mean = report.train_f1.mean;
  e.validation_mean = report.validation_f1.mean;
  e.test_mean = report.test_f1.mean;
  e.diverged = report.diverged;
  return e;
}

namespace {

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + num(v[i]);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string c; std::getline(ss, c, sep);) out.push_back(c);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

constexpr const char* kHeader =
    "rank,index,activation,cnn_blocks,scheme,regularization,lstm_layers,batch_size,diverged,"
    "train_mean,val_mean,test_mean,train_folds,val_folds,test_folds";

nlohmann::json identity(const SearchSpace& space, const SweepOptions& options) {
  return {{"space", to_json(space)}, {"options", to_json(options)}};
}

}  // namespace

std::string leaderboard_csv(const std::vector<SweepEntry>& ranked) {
  std::ostringstream s;
  s << kHeader << '\n';
  for (const auto& e : ranked) {
    const auto& c = e.config;
    s << e.rank << ',' << e.index << ',' << nn::to_string(c.activation) << ',' << c.cnn_blocks << ','
      << arch::to_string(c.scheme) << ',' << arch::to_string(c.regularization) << ',' << c.lstm_layers << ','
      << c.batch_size << ',' << (e.diverged ? 1 : 0) << ',' << num(e.train_mean) << ',' << num(e.validation_mean)
      << ',' << num(e.test_mean) << ',' << join(e.train_f1) << ',' << join(e.validation_f1) << ','
      << join(e.test_f1) << '\n';
  }
  return s.str();
}

std::vector<SweepEntry> read_leaderboard(const fs::path& path, const arch::ModelConfig& base) {
  std::istringstream in(harness::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw pipeline::DataError(path.string() + ": unexpected leaderboard header");
  }
  std::vector<SweepEntry> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = path.string() + " line " + std::to_string(line_no);
    if (cells.size() != 15) throw pipeline::DataError(where + ": expected 15 columns");
    try {
      SweepEntry e;
      e.rank = std::stoul(cells[0]);
      e.index = std::stoul(cells[1]);
      e.config = base;
      e.config.activation = nn::activation_from_string(cells[2]);
      e.config.cnn_blocks = std::stoi(cells[3]);
      e.config.scheme = arch::scheme_from_string(cells[4]);
      e.config.regularization = arch::regularization_from_string(cells[5]);
      e.config.lstm_layers = std::stoi(cells[6]);
      e.config.batch_size = std::stoi(cells[7]);
      e.diverged = cells[8] == "1";
      e.train_mean = std::stod(cells[9]);
      e.validation_mean = std::stod(cells[10]);
      e.test_mean = std::stod(cells[11]);
      auto parse = [](const std::string& s) {
        std::vector<double> v;
        for (const auto& x : split(s, ';')) v.push_back(std::stod(x));
        return v;
      };
      e.train_f1 = parse(cells[12]);
      e.validation_f1 = parse(cells[13]);
      e.test_f1 = parse(cells[14]);
      out.push_back(std::move(e));
    } catch (const pipeline::DataError&) {
      throw;
    } catch (const std::exception& ex) {
      throw pipeline::DataError(where + ": " + ex.what());
    }
  }
  return out;
}

SweepResult run_sweep(const pipeline::Dataset& labeled, const SearchSpace& space, const SweepOptions& options,
                      const std::optional<fs::path>& dir, bool resume) {
  const auto configs = sample_configs(space, options.n, options.seed, options.base, options.exhaustive);
  SweepResult result;
  result.total = configs.size();

  std::vector<bool> done(configs.size(), false);
  if (dir) {
    fs::create_directories(*dir);
    const fs::path spec_path = *dir / "sweep.json";
    const nlohmann::json id = identity(space, options);
    if (resume && fs::exists(spec_path)) {
      const auto stored = nlohmann::json::parse(harness::read_file(spec_path));
      if (stored != id) throw std::invalid_argument("cannot resume: " + spec_path.string() + " describes another sweep");
      if (fs::exists(*dir / "leaderboard.csv")) {
        result.leaderboard = read_leaderboard(*dir / "leaderboard.csv", options.base);
        for (const auto& e : result.leaderboard) {
          if (e.index >= configs.size() || !(e.config == configs[e.index]) || done[e.index]) {
            throw pipeline::DataError("leaderboard entry " + std::to_string(e.index) + " does not match the sweep");
          }
          done[e.index] = true;
        }
      }
    } else {
      harness::write_file_atomic(spec_path, id.dump(2) + "\n");
      std::error_code ec;
      fs::remove(*dir / "leaderboard.csv", ec);
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!done[i]) pending.push_back(i);
  }
  if (options.stop_after > 0 && pending.size() > options.stop_after) pending.resize(options.stop_after);

  harness::ExperimentOptions eopt;
  eopt.folds = options.folds;
  eopt.epochs = options.epochs;
  eopt.patience = options.patience;
  eopt.learning_rate = options.learning_rate;
  eopt.seed = options.seed;
  eopt.workers = 1;
  eopt.stratified = options.stratified;
  eopt.abort_on_divergence = false;

  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t k = next++; k < pending.size() && !failed; k = next++) {
      try {
        const std::size_t index = pending[k];
        const auto report = harness::run_experiment(labeled, configs[index], eopt);
        SweepEntry entry = entry_from_report(index, report);
        std::lock_guard lock(mutex);
        result.leaderboard.push_back(std::move(entry));
        rank_entries(result.leaderboard);
        if (dir) harness::write_file_atomic(*dir / "leaderboard.csv", leaderboard_csv(result.leaderboard));
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(pending.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  rank_entries(result.leaderboard);
  if (dir && pending.empty()) harness::write_file_atomic(*dir / "leaderboard.csv", leaderboard_csv(result.leaderboard));
  return result;
}

std::string render_leaderboard(const std::vector<SweepEntry>& ranked, std::size_t limit) {
  std::ostringstream s;
  s << std::left << std::setw(6) << "Rank" << std::setw(48) << "Configuration" << std::setw(10) << "Train"
    << std::setw(12) << "Validation" << "Test\n";
  const std::size_t n = limit == 0 ? ranked.size() : std::min(limit, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = ranked[i];
    std::ostringstream t, v, te;
    t << std::fixed << std::setprecision(3) << e.train_mean;
    v << std::fixed << std::setprecision(3) << e.validation_mean;
    te << std::fixed << std::setprecision(3) << e.test_mean;
    s << std::left << std::setw(6) << e.rank << std::setw(48) << (arch::describe(e.config) + (e.diverged ? " !" : ""))
      << std::setw(10) << t.str() << std::setw(12) << v.str() << te.str() << '\n';
  }
  return s.str();
}

}  // namespace fmsnet::sweep
