#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fmsnet/labels/rating.hpp"

namespace fmsnet::pipeline {

using Index = Eigen::Index;

inline constexpr double kSampleRateHz = 120.0;
inline constexpr int kChannelsPerImu = 6;

enum class Exercise { DS, HS, IL, TSP };
enum class Side { left, right, none };
/// Per-IMU channel order used for row arrangement.
enum class Channel { acc_x, acc_y, acc_z, gyr_x, gyr_y, gyr_z };

inline constexpr std::array<std::string_view, kChannelsPerImu> kChannelNames{"acc_x", "acc_y", "acc_z",
                                                                             "gyr_x", "gyr_y", "gyr_z"};

std::string to_string(Exercise e);
std::string to_string(Side s);
Exercise exercise_from_string(std::string_view s);
Side side_from_string(std::string_view s);
inline bool is_accelerometer(Channel c) { return static_cast<int>(c) < 3; }

/// Six rows (acc xyz in g, gyr xyz in deg/s), one column per 120 Hz sample.
using ImuStream = Eigen::Matrix<double, kChannelsPerImu, Eigen::Dynamic>;

struct Repetition {
  std::string id;
  std::string subject_id;
  Exercise exercise = Exercise::DS;
  Side side = Side::none;
  std::map<std::string, ImuStream> imus;
  Index true_length = 0;
  std::vector<int> ratings;
  std::optional<int> final_label;

  /// Throws std::invalid_argument when streams disagree with true_length or ratings leave {1,2,3}.
  void validate() const;
};

/// Ordered IMUs; row 6*i + c holds channel c of IMU i.
struct SensorLayout {
  std::vector<std::string> imu_ids;

  Index rows() const { return kChannelsPerImu * static_cast<Index>(imu_ids.size()); }
  Index row_of(std::size_t imu, Channel c) const { return kChannelsPerImu * static_cast<Index>(imu) + static_cast<int>(c); }
  std::size_t imu_of_row(Index row) const { return static_cast<std::size_t>(row / kChannelsPerImu); }
  Channel channel_of_row(Index row) const { return static_cast<Channel>(row % kChannelsPerImu); }

  /// Layout with ids "1".."n".
  static SensorLayout numbered(std::size_t count);

  friend bool operator==(const SensorLayout&, const SensorLayout&) = default;
};

using Rotation = Eigen::Matrix3d;
using AlignmentMap = std::map<std::string, Rotation>;

struct DatasetManifest {
  SensorLayout layout;
  Index max_length = 0;
  Index windows = 10;
  std::vector<std::string> subjects;
  std::vector<Exercise> exercises;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Repetition> repetitions;
  std::vector<labels::RatingRecord> ratings;
  std::optional<AlignmentMap> alignment;

  const Repetition* find(std::string_view id) const;
};

/// Smallest multiple of `windows` that is >= length.
Index round_up_length(Index length, Index windows);

}  // namespace fmsnet::pipeline
