#include "fmsnet/pipeline/preprocess.hpp"

#include <limits>
#include <stdexcept>

#include "fmsnet/log.hpp"

namespace fmsnet::pipeline {

void check_rotation(const Rotation& r, double tol) {
  if (!r.allFinite()) throw std::invalid_argument("rotation contains non-finite entries");
  const double ortho = (r.transpose() * r - Rotation::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol) throw std::invalid_argument("rotation is not orthonormal (max |R^T R - I| = " + std::to_string(ortho) + ")");
  const double det = r.determinant();
  if (std::abs(det - 1.0) > tol) {
    throw std::invalid_argument("rotation determinant is " + std::to_string(det) + ", expected +1");
  }
}

Repetition apply_alignment(const Repetition& rep, const AlignmentMap& rotations) {
  Repetition out = rep;
  for (auto& [imu, stream] : out.imus) {
    auto it = rotations.find(imu);
    if (it == rotations.end()) throw std::invalid_argument("no alignment rotation for imu " + imu);
    check_rotation(it->second);
    stream.topRows<3>() = it->second * stream.topRows<3>();
    stream.bottomRows<3>() = it->second * stream.bottomRows<3>();
  }
  return out;
}

Eigen::MatrixXd arrange_channels(const Repetition& rep, const SensorLayout& layout) {
  Eigen::MatrixXd out(layout.rows(), rep.true_length);
  for (std::size_t i = 0; i < layout.imu_ids.size(); ++i) {
    const auto& id = layout.imu_ids[i];
    auto it = rep.imus.find(id);
    if (it == rep.imus.end()) {
      throw std::invalid_argument("repetition " + rep.id + " is missing channel imu" + id + "_" +
                                  std::string(kChannelNames[0]));
    }
    if (it->second.cols() < rep.true_length) {
      throw std::invalid_argument("repetition " + rep.id + ": imu" + id + " stream shorter than true_length");
    }
    out.middleRows(layout.row_of(i, Channel::acc_x), kChannelsPerImu) = it->second.leftCols(rep.true_length);
  }
  return out;
}

std::map<std::string, ImuStream> split_channels(const Eigen::MatrixXd& matrix, const SensorLayout& layout) {
  if (matrix.rows() != layout.rows()) throw std::invalid_argument("matrix row count does not match the layout");
  std::map<std::string, ImuStream> out;
  for (std::size_t i = 0; i < layout.imu_ids.size(); ++i) {
    out[layout.imu_ids[i]] = matrix.middleRows(layout.row_of(i, Channel::acc_x), kChannelsPerImu);
  }
  return out;
}

ScalerParams fit_scaler(std::span<const Repetition* const> training) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  ScalerParams p{inf, -inf, inf, -inf, true};
  for (const Repetition* rep : training) {
    for (const auto& [imu, stream] : rep->imus) {
      const auto used = stream.leftCols(rep->true_length);
      if (used.cols() == 0) continue;
      p.acc_min = std::min(p.acc_min, used.topRows<3>().minCoeff());
      p.acc_max = std::max(p.acc_max, used.topRows<3>().maxCoeff());
      p.gyr_min = std::min(p.gyr_min, used.bottomRows<3>().minCoeff());
      p.gyr_max = std::max(p.gyr_max, used.bottomRows<3>().maxCoeff());
    }
  }
  if (p.acc_min > p.acc_max || p.gyr_min > p.gyr_max) {
    throw std::invalid_argument("fit_scaler needs at least one training sample");
  }
  return p;
}

ScalerParams fit_scaler(std::span<const Repetition> training) {
  std::vector<const Repetition*> ptrs;
  ptrs.reserve(training.size());
  for (const auto& r : training) ptrs.push_back(&r);
  return fit_scaler(std::span<const Repetition* const>(ptrs));
}

Eigen::MatrixXd apply_scaler(const Eigen::MatrixXd& matrix, const SensorLayout& layout, const ScalerParams& params) {
  if (!params.fitted) throw std::logic_error("scaler applied before fitting");
  if (matrix.rows() != layout.rows()) throw std::invalid_argument("matrix row count does not match the layout");
  const double acc_span = params.acc_max - params.acc_min;
  const double gyr_span = params.gyr_max - params.gyr_min;
  if (acc_span <= 0.0) warn("accelerometer training range is degenerate; accelerometer rows map to 0");
  if (gyr_span <= 0.0) warn("gyrometer training range is degenerate; gyrometer rows map to 0");
  Eigen::MatrixXd out(matrix.rows(), matrix.cols());
  for (Index r = 0; r < matrix.rows(); ++r) {
    const bool acc = is_accelerometer(layout.channel_of_row(r));
    const double lo = acc ? params.acc_min : params.gyr_min;
    const double span = acc ? acc_span : gyr_span;
    if (span <= 0.0) {
      out.row(r).setZero();
    } else {
      out.row(r) = (matrix.row(r).array() - lo) / span;
    }
  }
  return out;
}

Eigen::Vector3d WindowedSample::onehot() const {
  if (label < 1 || label > 3) throw std::logic_error("sample has no label");
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  v[label - 1] = 1.0;
  return v;
}

WindowedSample pad_and_window(const Eigen::MatrixXd& matrix, Index true_length, Index max_length, Index windows) {
  if (windows < 1) throw std::invalid_argument("window count must be >= 1");
  if (max_length % windows != 0) {
    throw std::invalid_argument("window count " + std::to_string(windows) + " does not divide max_length " +
                                std::to_string(max_length));
  }
  if (true_length > max_length) {
    throw std::invalid_argument("repetition length " + std::to_string(true_length) + " exceeds max_length " +
                                std::to_string(max_length));
  }
  if (true_length < 0 || matrix.cols() < true_length) throw std::invalid_argument("matrix shorter than true_length");
  const Index rows = matrix.rows();
  const Index len = max_length / windows;
  WindowedSample out{nn::Tensor<double>({windows, rows, len}), std::vector<bool>(windows), -1};
  for (Index w = 0; w < windows; ++w) {
    const Index start = w * len;
    out.mask[w] = start < true_length;
    const Index used = std::clamp<Index>(true_length - start, 0, len);
    if (used == 0) continue;
    auto dst = out.windows.matrix(windows * rows, len).middleRows(w * rows, rows);
    dst.leftCols(used) = matrix.block(0, start, rows, used);
  }
  return out;
}

}  // namespace fmsnet::pipeline
