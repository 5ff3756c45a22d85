#include "fmsnet/pipeline/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fmsnet/pipeline/preprocess.hpp"

namespace fmsnet::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view s, const fs::path& file, std::size_t row, std::size_t col) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError(file.string() + ": row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                    ": cannot parse '" + std::string(s) + "' as a finite number");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool ignored_channel(std::string_view channel) {
  return channel.starts_with("mag_") || channel.starts_with("pressure") || channel.starts_with("baro");
}

void check_id(const std::string& id, const std::string& what) {
  if (id.empty()) throw DataError(what + " id is empty");
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
      throw DataError(what + " id '" + id + "' contains characters outside [A-Za-z0-9_.-]");
    }
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::map<std::string, ImuStream> load_repetition_csv(const fs::path& csv, const SensorLayout& layout, Index& length) {
  std::ifstream in(csv);
  if (!in) throw DataError("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(csv.string() + ": empty file");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "t") throw DataError(csv.string() + ": first header column must be 't'");

  // column -> (imu index, channel) or ignored
  std::vector<std::pair<int, int>> mapping(header.size(), {-1, -1});
  std::set<std::pair<int, int>> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto name = header[c];
    const auto us = name.find('_');
    if (!name.starts_with("imu") || us == std::string_view::npos) {
      throw DataError(csv.string() + ": row 1, column " + std::to_string(c + 1) + ": unexpected column '" +
                      std::string(name) + "'");
    }
    const std::string imu(name.substr(3, us - 3));
    const auto channel = name.substr(us + 1);
    const auto imu_it = std::find(layout.imu_ids.begin(), layout.imu_ids.end(), imu);
    if (imu_it == layout.imu_ids.end() || ignored_channel(channel)) continue;
    const auto ch_it = std::find(kChannelNames.begin(), kChannelNames.end(), channel);
    if (ch_it == kChannelNames.end()) {
      throw DataError(csv.string() + ": row 1, column " + std::to_string(c + 1) + ": unknown channel '" +
                      std::string(name) + "'");
    }
    mapping[c] = {static_cast<int>(imu_it - layout.imu_ids.begin()), static_cast<int>(ch_it - kChannelNames.begin())};
    if (!seen.insert(mapping[c]).second) {
      throw DataError(csv.string() + ": duplicate column '" + std::string(name) + "'");
    }
  }
  for (std::size_t i = 0; i < layout.imu_ids.size(); ++i) {
    for (int ch = 0; ch < kChannelsPerImu; ++ch) {
      if (!seen.contains({static_cast<int>(i), ch})) {
        throw DataError(csv.string() + ": missing channel column imu" + layout.imu_ids[i] + "_" +
                        std::string(kChannelNames[ch]));
      }
    }
  }

  std::vector<std::vector<double>> columns(layout.imu_ids.size() * kChannelsPerImu);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError(csv.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " columns, header has " + std::to_string(header.size()));
    }
    parse_double(cells[0], csv, row, 0);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (mapping[c].first < 0) continue;
      columns[mapping[c].first * kChannelsPerImu + mapping[c].second].push_back(parse_double(cells[c], csv, row, c));
    }
  }
  length = static_cast<Index>(columns.empty() ? 0 : columns[0].size());
  std::map<std::string, ImuStream> out;
  for (std::size_t i = 0; i < layout.imu_ids.size(); ++i) {
    ImuStream s(kChannelsPerImu, length);
    for (int ch = 0; ch < kChannelsPerImu; ++ch) {
      s.row(ch) = Eigen::Map<const Eigen::RowVectorXd>(columns[i * kChannelsPerImu + ch].data(), length);
    }
    out.emplace(layout.imu_ids[i], std::move(s));
  }
  return out;
}

std::vector<labels::RatingRecord> load_ratings(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw DataError("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(csv.string() + ": empty file");
  const auto header = split_csv(line);
  if (header.size() != 3 || header[0] != "repetition_id" || header[1] != "rater_id" || header[2] != "score") {
    throw DataError(csv.string() + ": header must be 'repetition_id,rater_id,score'");
  }
  std::vector<labels::RatingRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw DataError(csv.string() + ": row " + std::to_string(row) + " must have 3 columns");
    int score = 0;
    const auto [ptr, ec] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), score);
    if (ec != std::errc() || ptr != cells[2].data() + cells[2].size() || score < 1 || score > 3) {
      throw DataError(csv.string() + ": row " + std::to_string(row) + ", column 3: score '" + std::string(cells[2]) +
                      "' is not one of 1, 2, 3");
    }
    labels::RatingRecord rec{std::string(cells[0]), std::string(cells[1]), score};
    if (!seen.insert({rec.repetition_id, rec.rater_id}).second) {
      throw DataError(csv.string() + ": row " + std::to_string(row) + ": duplicate rating by rater " + rec.rater_id +
                      " for " + rec.repetition_id);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void save_ratings(const std::vector<labels::RatingRecord>& ratings, const fs::path& csv) {
  std::ostringstream out;
  out << "repetition_id,rater_id,score\n";
  for (const auto& r : ratings) out << r.repetition_id << ',' << r.rater_id << ',' << r.score << '\n';
  write_text(csv, out.str());
}

AlignmentMap load_alignment(const fs::path& path) {
  const json j = read_json(path);
  AlignmentMap out;
  for (const auto& [imu, values] : j.items()) {
    if (!values.is_array() || values.size() != 9) {
      throw DataError(path.string() + ": imu " + imu + " must map to 9 row-major values");
    }
    Rotation r;
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = values.at(i).get<double>();
    try {
      check_rotation(r);
    } catch (const std::invalid_argument& e) {
      throw DataError(path.string() + ": imu " + imu + ": " + e.what());
    }
    out.emplace(imu, r);
  }
  return out;
}

void save_alignment(const AlignmentMap& alignment, const fs::path& path) {
  json j = json::object();
  for (const auto& [imu, r] : alignment) {
    json values = json::array();
    for (int i = 0; i < 9; ++i) values.push_back(r(i / 3, i % 3));
    j[imu] = values;
  }
  write_text(path, j.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& directory) {
  const fs::path manifest_path = directory / "manifest.json";
  const json m = read_json(manifest_path);
  Dataset ds;
  try {
    for (const auto& id : m.at("layout")) ds.manifest.layout.imu_ids.push_back(id.get<std::string>());
    ds.manifest.max_length = m.at("max_length").get<Index>();
    ds.manifest.windows = m.at("windows").get<Index>();
    ds.manifest.subjects = m.at("subjects").get<std::vector<std::string>>();
    for (const auto& e : m.at("exercises")) ds.manifest.exercises.push_back(exercise_from_string(e.get<std::string>()));
  } catch (const std::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  if (ds.manifest.layout.imu_ids.empty()) throw DataError(manifest_path.string() + ": layout lists no IMUs");
  if (ds.manifest.windows < 1 || ds.manifest.max_length < 1 || ds.manifest.max_length % ds.manifest.windows != 0) {
    throw DataError(manifest_path.string() + ": windows must divide a positive max_length");
  }
  const std::set<std::string> subjects(ds.manifest.subjects.begin(), ds.manifest.subjects.end());

  std::size_t index = 0;
  for (const auto& jr : m.at("repetitions")) {
    ++index;
    Repetition rep;
    Index declared = 0;
    std::string file;
    try {
      rep.id = jr.at("id").get<std::string>();
      rep.subject_id = jr.at("subject").get<std::string>();
      rep.exercise = exercise_from_string(jr.at("exercise").get<std::string>());
      rep.side = side_from_string(jr.at("side").get<std::string>());
      declared = jr.at("length").get<Index>();
      file = jr.at("file").get<std::string>();
    } catch (const std::exception& e) {
      throw DataError(manifest_path.string() + ": repetition entry " + std::to_string(index) + ": " + e.what());
    }
    check_id(rep.id, "repetition");
    if (!subjects.contains(rep.subject_id)) {
      throw DataError(manifest_path.string() + ": repetition " + rep.id + " names unknown subject " + rep.subject_id);
    }
    rep.imus = load_repetition_csv(directory / file, ds.manifest.layout, rep.true_length);
    if (rep.true_length != declared) {
      throw DataError(file + ": has " + std::to_string(rep.true_length) + " samples, manifest declares " +
                      std::to_string(declared));
    }
    if (rep.true_length < 1) throw DataError(file + ": repetition has no samples");
    if (rep.true_length > ds.manifest.max_length) {
      throw DataError(file + ": length " + std::to_string(rep.true_length) + " exceeds max_length");
    }
    if (ds.find(rep.id)) throw DataError(manifest_path.string() + ": duplicate repetition id " + rep.id);
    ds.repetitions.push_back(std::move(rep));
  }

  if (fs::exists(directory / "ratings.csv")) {
    ds.ratings = load_ratings(directory / "ratings.csv");
    std::map<std::string, Repetition*> by_id;
    for (auto& r : ds.repetitions) by_id[r.id] = &r;
    for (const auto& rec : ds.ratings) {
      auto it = by_id.find(rec.repetition_id);
      if (it == by_id.end()) throw DataError("ratings.csv: unknown repetition " + rec.repetition_id);
      it->second->ratings.push_back(rec.score);
    }
  }
  if (fs::exists(directory / "alignment.json")) ds.alignment = load_alignment(directory / "alignment.json");
  return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& directory) {
  fs::create_directories(directory / "reps");
  const auto& layout = dataset.manifest.layout;
  json reps = json::array();
  for (const auto& rep : dataset.repetitions) {
    check_id(rep.id, "repetition");
    rep.validate();
    const std::string file = "reps/" + rep.id + ".csv";
    reps.push_back({{"id", rep.id},
                    {"file", file},
                    {"subject", rep.subject_id},
                    {"exercise", to_string(rep.exercise)},
                    {"side", to_string(rep.side)},
                    {"length", rep.true_length}});
    const Eigen::MatrixXd matrix = arrange_channels(rep, layout);
    std::string text = "t";
    for (const auto& id : layout.imu_ids) {
      for (auto ch : kChannelNames) text += ",imu" + id + "_" + std::string(ch);
    }
    text += '\n';
    for (Index t = 0; t < rep.true_length; ++t) {
      text += format_double(static_cast<double>(t) / kSampleRateHz);
      for (Index r = 0; r < matrix.rows(); ++r) {
        text += ',';
        text += format_double(matrix(r, t));
      }
      text += '\n';
    }
    write_text(directory / file, text);
  }
  json exercises = json::array();
  for (auto e : dataset.manifest.exercises) exercises.push_back(to_string(e));
  json channels = json::array();
  for (auto c : kChannelNames) channels.push_back(std::string(c));
  const json manifest{{"format", "fmsnet-dataset"},
                      {"version", 1},
                      {"sample_rate_hz", kSampleRateHz},
                      {"channels", channels},
                      {"layout", layout.imu_ids},
                      {"max_length", dataset.manifest.max_length},
                      {"windows", dataset.manifest.windows},
                      {"subjects", dataset.manifest.subjects},
                      {"exercises", exercises},
                      {"repetitions", reps}};
  write_text(directory / "manifest.json", manifest.dump(2) + "\n");
  save_ratings(dataset.ratings, directory / "ratings.csv");
  if (dataset.alignment) save_alignment(*dataset.alignment, directory / "alignment.json");
}

}  // namespace fmsnet::pipeline
