#pragma once

#include <span>
#include <vector>

#include "fmsnet/nn/tensor.hpp"
#include "fmsnet/pipeline/types.hpp"

namespace fmsnet::pipeline {

// --- segment alignment ----------------------------------------------------

/// Throws std::invalid_argument unless R^T R = I and det R = +1, both within tol.
void check_rotation(const Rotation& r, double tol = 1e-6);

/// Left-multiplies every acc and gyr 3-vector of each IMU by that IMU's rotation.
/// Every IMU of the repetition must have an entry in `rotations`.
Repetition apply_alignment(const Repetition& rep, const AlignmentMap& rotations);

// --- channel arrangement --------------------------------------------------

/// (layout.rows() x true_length) matrix, IMU by IMU, acc xyz then gyr xyz.
/// Throws std::invalid_argument naming the first missing (imu, channel).
Eigen::MatrixXd arrange_channels(const Repetition& rep, const SensorLayout& layout);

/// Inverse of arrange_channels.
std::map<std::string, ImuStream> split_channels(const Eigen::MatrixXd& matrix, const SensorLayout& layout);

// --- per-sensor min-max scaling ---------------------------------------------

struct ScalerParams {
  double acc_min = 0.0;
  double acc_max = 0.0;
  double gyr_min = 0.0;
  double gyr_max = 0.0;
  bool fitted = false;

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Accelerometer and gyrometer extrema over the first true_length samples of every
/// stream in `training`. Pass training-split repetitions only.
ScalerParams fit_scaler(std::span<const Repetition* const> training);
ScalerParams fit_scaler(std::span<const Repetition> training);

/// (v - min) / (max - min) per sensor class; no clipping. A degenerate class maps to 0
/// and emits a warning.
Eigen::MatrixXd apply_scaler(const Eigen::MatrixXd& matrix, const SensorLayout& layout, const ScalerParams& params);

// --- padding and windowing --------------------------------------------------

struct WindowedSample {
  nn::Tensor<double> windows;  // (X, rows, window_length)
  std::vector<bool> mask;      // mask[i] <=> window i starts before true_length
  int label = -1;              // FMS rating 1..3, or -1 when unlabeled

  Index window_length() const { return windows.dim(2); }
  Eigen::Vector3d onehot() const;
};

/// Zero-pads `matrix` (rows x >= true_length) to max_length columns and splits it into
/// X contiguous windows. X must divide max_length.
WindowedSample pad_and_window(const Eigen::MatrixXd& matrix, Index true_length, Index max_length, Index windows);

}  // namespace fmsnet::pipeline
