#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fmsnet/harness/experiment.hpp"

namespace fmsnet::harness {

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// One summary row: mean ± std of the fold macro F1 scores.
struct SummaryRow {
  std::string selection;
  int folds = 0;
  MeanStd train, validation, test;
};

SummaryRow summary_row(const ExperimentReport& report);

/// Writes config.json, split_plan.json, history.csv, metrics.json and report.csv into `dir`.
void write_experiment(const std::filesystem::path& dir, const ExperimentReport& report);

/// Reads report.csv from a run directory. Throws pipeline::DataError if missing or malformed.
std::vector<SummaryRow> read_summary(const std::filesystem::path& dir);

/// Fixed-width text table: dataset, folds, training, validation, test.
std::string render_summary(const std::vector<SummaryRow>& rows);

std::string history_csv(const ExperimentReport& report);
std::string report_csv(const ExperimentReport& report);

}  // namespace fmsnet::harness
