#pragma once

#include <filesystem>
#include <stdexcept>

#include "fmsnet/pipeline/types.hpp"

namespace fmsnet::pipeline {

/// Malformed dataset files. The message carries file, row and column context.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset directory layout:
///   manifest.json        layout, max_length, windows, subjects, exercises, repetitions[]
///   reps/<id>.csv        header `t,imu<id>_acc_x,...,imu<id>_gyr_z`, one row per sample
///   ratings.csv          repetition_id,rater_id,score
///   alignment.json       optional, IMU id -> row-major 3x3 rotation
///
/// Columns for magnetometer or pressure channels are accepted and ignored.
Dataset load_dataset(const std::filesystem::path& directory);
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);

std::vector<labels::RatingRecord> load_ratings(const std::filesystem::path& csv);
void save_ratings(const std::vector<labels::RatingRecord>& ratings, const std::filesystem::path& csv);

AlignmentMap load_alignment(const std::filesystem::path& json);
void save_alignment(const AlignmentMap& alignment, const std::filesystem::path& json);

/// Reads one repetition CSV into per-IMU streams for the given layout.
std::map<std::string, ImuStream> load_repetition_csv(const std::filesystem::path& csv, const SensorLayout& layout,
                                                     Index& length);

}  // namespace fmsnet::pipeline
