#include "fmsnet/pipeline/types.hpp"

#include <iostream>
#include <mutex>
#include <stdexcept>

#include "fmsnet/log.hpp"

namespace fmsnet {

namespace {
std::mutex g_warn_mutex;
WarningHandler g_handler;
}  // namespace

void warn(std::string_view message) {
  std::lock_guard lock(g_warn_mutex);
  if (g_handler) {
    g_handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warn_mutex);
  return std::exchange(g_handler, std::move(handler));
}

}  // namespace fmsnet

namespace fmsnet::pipeline {

std::string to_string(Exercise e) {
  switch (e) {
    case Exercise::DS: return "DS";
    case Exercise::HS: return "HS";
    case Exercise::IL: return "IL";
    case Exercise::TSP: return "TSP";
  }
  return "DS";
}

std::string to_string(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::none: return "none";
  }
  return "none";
}

Exercise exercise_from_string(std::string_view s) {
  if (s == "DS") return Exercise::DS;
  if (s == "HS") return Exercise::HS;
  if (s == "IL") return Exercise::IL;
  if (s == "TSP") return Exercise::TSP;
  throw std::invalid_argument("unknown exercise '" + std::string(s) + "'");
}

Side side_from_string(std::string_view s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  if (s == "none") return Side::none;
  throw std::invalid_argument("unknown side '" + std::string(s) + "'");
}

void Repetition::validate() const {
  if (true_length < 1) throw std::invalid_argument("repetition " + id + " has no samples");
  for (const auto& [imu, stream] : imus) {
    if (stream.cols() != true_length) {
      throw std::invalid_argument("repetition " + id + ": imu " + imu + " has " + std::to_string(stream.cols()) +
                                  " samples, expected " + std::to_string(true_length));
    }
  }
  for (int r : ratings) {
    if (r < 1 || r > 3) throw std::invalid_argument("repetition " + id + " has rating outside {1,2,3}");
  }
  if (final_label && (*final_label < 1 || *final_label > 3)) {
    throw std::invalid_argument("repetition " + id + " has a final label outside {1,2,3}");
  }
}

SensorLayout SensorLayout::numbered(std::size_t count) {
  SensorLayout layout;
  for (std::size_t i = 1; i <= count; ++i) layout.imu_ids.push_back(std::to_string(i));
  return layout;
}

const Repetition* Dataset::find(std::string_view id) const {
  for (const auto& r : repetitions) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

Index round_up_length(Index length, Index windows) {
  if (windows < 1) throw std::invalid_argument("window count must be >= 1");
  return ((length + windows - 1) / windows) * windows;
}

}  // namespace fmsnet::pipeline
