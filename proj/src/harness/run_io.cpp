#include "fmsnet/harness/run_io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fmsnet/pipeline/dataset_io.hpp"

namespace fmsnet::harness {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pipeline::DataError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

SummaryRow summary_row(const ExperimentReport& r) {
  return {r.selection, static_cast<int>(r.folds.size()), r.train_f1, r.validation_f1, r.test_f1};
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::string history_csv(const ExperimentReport& r) {
  std::ostringstream s;
  s << "fold,test_subject,epoch,train_loss,train_macro_f1,val_loss,val_macro_f1,best\n";
  for (const auto& f : r.folds) {
    for (const auto& h : f.history) {
      s << f.fold << ',' << f.test_subject << ',' << h.epoch << ',' << fmt(h.train_loss) << ',' << fmt(h.train_f1)
        << ',' << fmt(h.val_loss) << ',' << fmt(h.val_f1) << ',' << (h.epoch == f.best_epoch ? 1 : 0) << '\n';
    }
  }
  return s.str();
}

std::string report_csv(const ExperimentReport& r) {
  const SummaryRow row = summary_row(r);
  std::ostringstream s;
  s << "selection,folds,train_mean,train_std,val_mean,val_std,test_mean,test_std\n";
  s << row.selection << ',' << row.folds << ',' << fmt(row.train.mean) << ',' << fmt(row.train.std) << ','
    << fmt(row.validation.mean) << ',' << fmt(row.validation.std) << ',' << fmt(row.test.mean) << ','
    << fmt(row.test.std) << '\n';
  return s.str();
}

void write_experiment(const fs::path& dir, const ExperimentReport& r) {
  fs::create_directories(dir);
  const nlohmann::json config = {
      {"selection", r.selection}, {"model", arch::to_json(r.config)}, {"options", to_json(r.options)}};
  write_file_atomic(dir / "config.json", config.dump(2) + "\n");
  write_file_atomic(dir / "split_plan.json", to_json(r.plan, r.ids).dump(2) + "\n");
  write_file_atomic(dir / "history.csv", history_csv(r));
  write_file_atomic(dir / "metrics.json", to_json(r).dump(2) + "\n");
  write_file_atomic(dir / "report.csv", report_csv(r));
}

std::vector<SummaryRow> read_summary(const fs::path& dir) {
  const fs::path path = dir / "report.csv";
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  std::vector<SummaryRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (cells.size() != 8) {
      throw pipeline::DataError(path.string() + " line " + std::to_string(line_no) + ": expected 8 columns");
    }
    try {
      SummaryRow row;
      row.selection = cells[0];
      row.folds = std::stoi(cells[1]);
      row.train = {std::stod(cells[2]), std::stod(cells[3])};
      row.validation = {std::stod(cells[4]), std::stod(cells[5])};
      row.test = {std::stod(cells[6]), std::stod(cells[7])};
      rows.push_back(row);
    } catch (const std::exception&) {
      throw pipeline::DataError(path.string() + " line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

std::string render_summary(const std::vector<SummaryRow>& rows) {
  auto cell = [](const MeanStd& m) { return fixed(m.mean, 2) + " ± " + fixed(m.std, 2); };
  std::ostringstream s;
  s << std::left << std::setw(14) << "Dataset" << std::setw(7) << "Folds" << std::setw(15) << "Training"
    << std::setw(15) << "Validation" << "Test\n";
  for (const auto& r : rows) {
    // "±" is two bytes in UTF-8; widen the fields so columns stay aligned.
    s << std::left << std::setw(14) << r.selection << std::setw(7) << r.folds << std::setw(16) << cell(r.train)
      << std::setw(16) << cell(r.validation) << cell(r.test) << '\n';
  }
  return s.str();
}

}  // namespace fmsnet::harness
