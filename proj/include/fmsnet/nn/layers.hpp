#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fmsnet/nn/activation.hpp"
#include "fmsnet/nn/init.hpp"
#include "fmsnet/nn/layer_spec.hpp"
#include "fmsnet/nn/random.hpp"
#include "fmsnet/nn/tensor.hpp"

namespace fmsnet::nn {

/// A trainable tensor together with its gradient accumulator.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar>* value = nullptr;
  Tensor<Scalar>* grad = nullptr;
};

namespace detail {

inline Index same_pad_before(Index kernel) { return (kernel - 1) / 2; }

// Rows are output positions (n, y, x); columns are (i, j, c) kernel taps.
template <typename Scalar>
RowMatrix<Scalar> im2col(const Tensor<Scalar>& x, Index kh, Index kw) {
  const Index n_img = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const Index pt = same_pad_before(kh), pl = same_pad_before(kw);
  RowMatrix<Scalar> cols = RowMatrix<Scalar>::Zero(n_img * h * w, kh * kw * c);
  const Scalar* src = x.data();
  for (Index n = 0; n < n_img; ++n) {
    for (Index y = 0; y < h; ++y) {
      for (Index xx = 0; xx < w; ++xx) {
        Scalar* row = cols.data() + ((n * h + y) * w + xx) * cols.cols();
        for (Index i = 0; i < kh; ++i) {
          const Index iy = y + i - pt;
          if (iy < 0 || iy >= h) continue;
          for (Index j = 0; j < kw; ++j) {
            const Index ix = xx + j - pl;
            if (ix < 0 || ix >= w) continue;
            const Scalar* px = src + ((n * h + iy) * w + ix) * c;
            std::copy(px, px + c, row + (i * kw + j) * c);
          }
        }
      }
    }
  }
  return cols;
}

template <typename Scalar>
Tensor<Scalar> col2im(const RowMatrix<Scalar>& cols, const Shape& shape, Index kh, Index kw) {
  const Index n_img = shape[0], h = shape[1], w = shape[2], c = shape[3];
  const Index pt = same_pad_before(kh), pl = same_pad_before(kw);
  Tensor<Scalar> out(shape);
  Scalar* dst = out.data();
  for (Index n = 0; n < n_img; ++n) {
    for (Index y = 0; y < h; ++y) {
      for (Index xx = 0; xx < w; ++xx) {
        const Scalar* row = cols.data() + ((n * h + y) * w + xx) * cols.cols();
        for (Index i = 0; i < kh; ++i) {
          const Index iy = y + i - pt;
          if (iy < 0 || iy >= h) continue;
          for (Index j = 0; j < kw; ++j) {
            const Index ix = xx + j - pl;
            if (ix < 0 || ix >= w) continue;
            Scalar* px = dst + ((n * h + iy) * w + ix) * c;
            const Scalar* pc = row + (i * kw + j) * c;
            for (Index k = 0; k < c; ++k) px[k] += pc[k];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// 2D convolution over (N, H, W, C) inputs with "same" padding and stride 1.
template <typename Scalar>
class Conv2d {
 public:
  Conv2d(Index kernel_h, Index kernel_w, Index in_channels, Index filters, Activation activation,
         std::uint64_t seed)
      : kernel_(glorot_uniform_init<Scalar>(kernel_h * kernel_w * in_channels, kernel_h * kernel_w * filters,
                                            {kernel_h, kernel_w, in_channels, filters}, seed)),
        bias_({filters}),
        grad_kernel_(kernel_.shape()),
        grad_bias_(bias_.shape()),
        activation_(activation) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x) {
    if (x.rank() != 4 || x.dim(3) != in_channels()) {
      throw std::invalid_argument("conv2d expects (N, H, W, " + std::to_string(in_channels()) + ") input, got " +
                                  shape_to_string(x.shape()));
    }
    in_shape_ = x.shape();
    cols_ = detail::im2col(x, kernel_h(), kernel_w());
    z_.noalias() = cols_ * kernel_matrix();
    z_.rowwise() += bias_.values().transpose();
    Tensor<Scalar> y({x.dim(0), x.dim(1), x.dim(2), filters()});
    y.matrix(z_.rows(), z_.cols()).array() = activate(activation_, z_.array());
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy, bool need_input_grad = true) {
    RowMatrix<Scalar> dz = dy.matrix(z_.rows(), z_.cols()).array() * activation_derivative(activation_, z_.array());
    grad_kernel_.matrix(cols_.cols(), filters()).noalias() += cols_.transpose() * dz;
    grad_bias_.values() += dz.colwise().sum().transpose();
    if (!need_input_grad) return {};
    RowMatrix<Scalar> dcols = dz * kernel_matrix().transpose();
    return detail::col2im(dcols, in_shape_, kernel_h(), kernel_w());
  }

  Index kernel_h() const { return kernel_.dim(0); }
  Index kernel_w() const { return kernel_.dim(1); }
  Index in_channels() const { return kernel_.dim(2); }
  Index filters() const { return kernel_.dim(3); }
  Activation activation() const { return activation_; }

  Tensor<Scalar>& kernel() { return kernel_; }
  Tensor<Scalar>& bias() { return bias_; }

  void collect(std::vector<Parameter<Scalar>>& out, const std::string& prefix) {
    out.push_back({prefix + "/kernel", &kernel_, &grad_kernel_});
    out.push_back({prefix + "/bias", &bias_, &grad_bias_});
  }

 private:
  Eigen::Map<const RowMatrix<Scalar>> kernel_matrix() const {
    return {kernel_.data(), kernel_h() * kernel_w() * in_channels(), filters()};
  }

  Tensor<Scalar> kernel_, bias_, grad_kernel_, grad_bias_;
  Activation activation_;
  Shape in_shape_;
  RowMatrix<Scalar> cols_, z_;
};

/// Free-function convolution of a single (H, W, C) image with (kh, kw, C, F) kernels.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& kernels, const Tensor<Scalar>& bias,
                      Activation activation) {
  if (input.rank() != 3 || kernels.rank() != 4) {
    throw std::invalid_argument("conv2d expects an (H, W, C) input and (kh, kw, C, F) kernels");
  }
  if (input.dim(2) != kernels.dim(2)) {
    throw std::invalid_argument("conv2d channel mismatch: input has " + std::to_string(input.dim(2)) +
                                ", kernels expect " + std::to_string(kernels.dim(2)));
  }
  Conv2d<Scalar> layer(kernels.dim(0), kernels.dim(1), kernels.dim(2), kernels.dim(3), activation, 0);
  layer.kernel() = kernels;
  layer.bias() = bias;
  Tensor<Scalar> batched = input;
  batched.reshape({1, input.dim(0), input.dim(1), input.dim(2)});
  Tensor<Scalar> out = layer.forward(batched);
  out.reshape({input.dim(0), input.dim(1), kernels.dim(3)});
  return out;
}

/// Pooled extent along an axis: 2, or 1 when the axis has collapsed to a single cell.
inline Index pool_extent(Index dim) { return dim >= 2 ? 2 : 1; }

/// 2x2 max pooling with stride 2 over (N, H, W, C); odd trailing rows/columns are dropped.
template <typename Scalar>
class MaxPool2d {
 public:
  static Shape output_shape(const Shape& in) {
    return {in[0], in[1] / pool_extent(in[1]), in[2] / pool_extent(in[2]), in[3]};
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) {
    in_shape_ = x.shape();
    const Index n_img = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const Index ph = pool_extent(h), pw = pool_extent(w);
    Tensor<Scalar> y(output_shape(x.shape()));
    const Index ho = y.dim(1), wo = y.dim(2);
    argmax_.resize(y.size());
    const Scalar* src = x.data();
    Index k = 0;
    for (Index n = 0; n < n_img; ++n) {
      for (Index oy = 0; oy < ho; ++oy) {
        for (Index ox = 0; ox < wo; ++ox) {
          for (Index ch = 0; ch < c; ++ch, ++k) {
            Index best = ((n * h + oy * ph) * w + ox * pw) * c + ch;
            for (Index i = 0; i < ph; ++i) {
              for (Index j = 0; j < pw; ++j) {
                const Index idx = ((n * h + oy * ph + i) * w + ox * pw + j) * c + ch;
                if (src[idx] > src[best]) best = idx;
              }
            }
            argmax_[k] = best;
            y[k] = src[best];
          }
        }
      }
    }
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy) const {
    Tensor<Scalar> dx(in_shape_);
    for (Index k = 0; k < dy.size(); ++k) dx[argmax_[k]] += dy[k];
    return dx;
  }

 private:
  Shape in_shape_;
  std::vector<Index> argmax_;
};

template <typename Scalar>
Tensor<Scalar> maxpool2d(const Tensor<Scalar>& input) {
  if (input.rank() != 2 && input.rank() != 3) {
    throw std::invalid_argument("maxpool2d expects an (H, W) or (H, W, C) input");
  }
  const Index c = input.rank() == 3 ? input.dim(2) : 1;
  Tensor<Scalar> batched = input;
  batched.reshape({1, input.dim(0), input.dim(1), c});
  MaxPool2d<Scalar> pool;
  Tensor<Scalar> out = pool.forward(batched);
  if (input.rank() == 2) {
    out.reshape({out.dim(1), out.dim(2)});
  } else {
    out.reshape({out.dim(1), out.dim(2), c});
  }
  return out;
}

/// Inverted dropout. Masks are a pure function of (layer seed, step seed).
template <typename Scalar>
class Dropout {
 public:
  Dropout(double rate, std::uint64_t seed) : rate_(rate), seed_(seed) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training, std::uint64_t step_seed) {
    active_ = training && rate_ > 0.0;
    if (!active_) return x;
    Rng rng(mix_seed(seed_, step_seed));
    const Scalar keep_scale = Scalar(1.0 / (1.0 - rate_));
    mask_.resize(x.size());
    for (Index i = 0; i < x.size(); ++i) mask_[i] = rng.uniform() >= rate_ ? keep_scale : Scalar(0);
    Tensor<Scalar> y = x;
    y.values().array() *= mask_.array();
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy) const {
    if (!active_) return dy;
    Tensor<Scalar> dx = dy;
    dx.values().array() *= mask_.array();
    return dx;
  }

  double rate() const { return rate_; }
  std::uint64_t seed() const { return seed_; }

 private:
  double rate_;
  std::uint64_t seed_;
  bool active_ = false;
  Vector<Scalar> mask_;
};

/// Batch normalization over the last axis; statistics span every other axis.
template <typename Scalar>
class BatchNorm {
 public:
  static constexpr double kMomentum = 0.99;
  static constexpr double kEpsilon = 1e-3;

  explicit BatchNorm(Index channels)
      : gamma_({channels}, Scalar(1)),
        beta_({channels}),
        grad_gamma_({channels}),
        grad_beta_({channels}),
        running_mean_({channels}),
        running_var_({channels}, Scalar(1)) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training) {
    const Index c = channels();
    if (x.shape().back() != c) throw std::invalid_argument("batchnorm channel mismatch");
    const Index m = x.size() / c;
    auto xm = x.matrix(m, c);
    training_ = training;
    RowVector<Scalar> mean, var;
    if (training) {
      mean = xm.colwise().mean();
      var = (xm.rowwise() - mean).array().square().colwise().mean().matrix();
      running_mean_.values() = Scalar(kMomentum) * running_mean_.values() + Scalar(1 - kMomentum) * mean.transpose();
      running_var_.values() = Scalar(kMomentum) * running_var_.values() + Scalar(1 - kMomentum) * var.transpose();
    } else {
      mean = running_mean_.values().transpose();
      var = running_var_.values().transpose();
    }
    inv_std_ = (var.array() + Scalar(kEpsilon)).rsqrt().matrix();
    xhat_ = (xm.rowwise() - mean).array().rowwise() * inv_std_.array();
    Tensor<Scalar> y(x.shape());
    y.matrix(m, c) = (xhat_.array().rowwise() * gamma_.values().transpose().array()).rowwise() +
                     beta_.values().transpose().array();
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy) {
    const Index c = channels();
    const Index m = dy.size() / c;
    auto dym = dy.matrix(m, c);
    grad_gamma_.values() += (dym.array() * xhat_.array()).colwise().sum().matrix().transpose();
    grad_beta_.values() += dym.colwise().sum().transpose();
    RowMatrix<Scalar> dxhat = dym.array().rowwise() * gamma_.values().transpose().array();
    Tensor<Scalar> dx(dy.shape());
    if (!training_) {
      dx.matrix(m, c) = dxhat.array().rowwise() * inv_std_.array();
      return dx;
    }
    const RowVector<Scalar> sum_dxhat = dxhat.colwise().sum();
    const RowVector<Scalar> sum_dxhat_xhat = (dxhat.array() * xhat_.array()).colwise().sum().matrix();
    RowMatrix<Scalar> inner = (Scalar(m) * dxhat).rowwise() - sum_dxhat;
    inner -= (xhat_.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    dx.matrix(m, c) = (inner.array().rowwise() * inv_std_.array()) / Scalar(m);
    return dx;
  }

  Index channels() const { return gamma_.size(); }
  Tensor<Scalar>& running_mean() { return running_mean_; }
  Tensor<Scalar>& running_var() { return running_var_; }

  void collect(std::vector<Parameter<Scalar>>& out, const std::string& prefix) {
    out.push_back({prefix + "/gamma", &gamma_, &grad_gamma_});
    out.push_back({prefix + "/beta", &beta_, &grad_beta_});
  }

 private:
  Tensor<Scalar> gamma_, beta_, grad_gamma_, grad_beta_, running_mean_, running_var_;
  bool training_ = false;
  RowVector<Scalar> inv_std_;
  RowMatrix<Scalar> xhat_;
};

/// Fully connected layer: y = act(x W + b) on (B, in) inputs.
template <typename Scalar>
class Dense {
 public:
  Dense(Index in_features, Index units, Activation activation, std::uint64_t seed)
      : weights_(glorot_uniform_init<Scalar>(in_features, units, {in_features, units}, seed)),
        bias_({units}),
        grad_weights_(weights_.shape()),
        grad_bias_(bias_.shape()),
        activation_(activation) {}

  RowMatrix<Scalar> forward(const RowMatrix<Scalar>& x) {
    if (x.cols() != in_features()) {
      throw std::invalid_argument("dense expects " + std::to_string(in_features()) + " input features, got " +
                                  std::to_string(x.cols()));
    }
    x_ = x;
    z_.noalias() = x * weights_.matrix();
    z_.rowwise() += bias_.values().transpose();
    return activate(activation_, z_.array()).matrix();
  }

  RowMatrix<Scalar> backward(const RowMatrix<Scalar>& dy) {
    RowMatrix<Scalar> dz = dy.array() * activation_derivative(activation_, z_.array());
    grad_weights_.matrix().noalias() += x_.transpose() * dz;
    grad_bias_.values() += dz.colwise().sum().transpose();
    return dz * weights_.matrix().transpose();
  }

  Index in_features() const { return weights_.dim(0); }
  Index units() const { return weights_.dim(1); }
  Activation activation() const { return activation_; }
  Tensor<Scalar>& weights() { return weights_; }
  Tensor<Scalar>& bias() { return bias_; }

  void collect(std::vector<Parameter<Scalar>>& out, const std::string& prefix) {
    out.push_back({prefix + "/weights", &weights_, &grad_weights_});
    out.push_back({prefix + "/bias", &bias_, &grad_bias_});
  }

 private:
  Tensor<Scalar> weights_, bias_, grad_weights_, grad_bias_;
  Activation activation_;
  RowMatrix<Scalar> x_, z_;
};

/// Maps every unmasked (batch, step) cell to a row of a compact matrix.
///
/// Sequence layers only ever see unmasked steps, so padded windows cost nothing
/// and cannot leak into the recurrent state.
struct SequenceLayout {
  Index batch = 0;
  Index steps = 0;
  Eigen::Array<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row;  // -1 when masked
  Index active = 0;

  static SequenceLayout from_mask(const MaskMatrix& mask);
};

template <typename Scalar>
struct LstmOutput {
  RowMatrix<Scalar> sequence;  // (active, units), hidden state at every unmasked step
  RowMatrix<Scalar> final;     // (batch, units), state after the last step
};

/// LSTM with tanh activation and sigmoid recurrent activation; gate order i, f, g, o.
/// Masked steps leave (h, c) untouched.
template <typename Scalar>
class Lstm {
 public:
  Lstm(Index in_features, Index units, std::uint64_t seed)
      : kernel_(glorot_uniform_init<Scalar>(in_features, 4 * units, {in_features, 4 * units}, seed)),
        recurrent_(glorot_uniform_init<Scalar>(units, 4 * units, {units, 4 * units}, mix_seed(seed, 1))),
        bias_({4 * units}),
        grad_kernel_(kernel_.shape()),
        grad_recurrent_(recurrent_.shape()),
        grad_bias_(bias_.shape()) {}

  LstmOutput<Scalar> forward(const RowMatrix<Scalar>& x, const SequenceLayout& layout) {
    const Index u = units();
    if (x.cols() != in_features()) {
      throw std::invalid_argument("lstm expects " + std::to_string(in_features()) + " input features, got " +
                                  std::to_string(x.cols()));
    }
    if (x.rows() != layout.active) throw std::invalid_argument("lstm input rows do not match the mask");
    layout_ = layout;
    x_ = x;
    RowMatrix<Scalar> projected = x * kernel_.matrix();
    projected.rowwise() += bias_.values().transpose();

    gates_.resize(layout.active, 4 * u);
    c_prev_.resize(layout.active, u);
    c_.resize(layout.active, u);
    h_prev_.resize(layout.active, u);

    LstmOutput<Scalar> out{RowMatrix<Scalar>(layout.active, u), RowMatrix<Scalar>::Zero(layout.batch, u)};
    RowMatrix<Scalar> cell = RowMatrix<Scalar>::Zero(layout.batch, u);
    std::vector<Index> bs, rs;
    for (Index t = 0; t < layout.steps; ++t) {
      active_cells(layout, t, bs, rs);
      if (bs.empty()) continue;
      const Index k = static_cast<Index>(bs.size());
      RowMatrix<Scalar> h_act(k, u), c_act(k, u), z(k, 4 * u);
      for (Index i = 0; i < k; ++i) {
        h_act.row(i) = out.final.row(bs[i]);
        c_act.row(i) = cell.row(bs[i]);
        z.row(i) = projected.row(rs[i]);
      }
      z.noalias() += h_act * recurrent_.matrix();
      z.leftCols(2 * u) = activate(Activation::sigmoid, z.leftCols(2 * u).array()).matrix();
      z.middleCols(2 * u, u) = z.middleCols(2 * u, u).array().tanh().matrix();
      z.rightCols(u) = activate(Activation::sigmoid, z.rightCols(u).array()).matrix();
      RowMatrix<Scalar> c_new = z.middleCols(u, u).cwiseProduct(c_act) + z.leftCols(u).cwiseProduct(z.middleCols(2 * u, u));
      RowMatrix<Scalar> h_new = z.rightCols(u).cwiseProduct(c_new.array().tanh().matrix());
      for (Index i = 0; i < k; ++i) {
        gates_.row(rs[i]) = z.row(i);
        c_prev_.row(rs[i]) = c_act.row(i);
        c_.row(rs[i]) = c_new.row(i);
        h_prev_.row(rs[i]) = h_act.row(i);
        out.sequence.row(rs[i]) = h_new.row(i);
        out.final.row(bs[i]) = h_new.row(i);
        cell.row(bs[i]) = c_new.row(i);
      }
    }
    return out;
  }

  /// d_sequence may be empty (0 rows) when only the final state feeds downstream.
  RowMatrix<Scalar> backward(const RowMatrix<Scalar>& d_sequence, const RowMatrix<Scalar>& d_final,
                             bool need_input_grad = true) {
    const Index u = units();
    const SequenceLayout& layout = layout_;
    RowMatrix<Scalar> dh = d_final;
    RowMatrix<Scalar> dc = RowMatrix<Scalar>::Zero(layout.batch, u);
    RowMatrix<Scalar> dz_all = RowMatrix<Scalar>::Zero(layout.active, 4 * u);
    const bool has_seq = d_sequence.rows() > 0;
    std::vector<Index> bs, rs;
    for (Index t = layout.steps - 1; t >= 0; --t) {
      active_cells(layout, t, bs, rs);
      if (bs.empty()) continue;
      const Index k = static_cast<Index>(bs.size());
      RowMatrix<Scalar> dz(k, 4 * u);
      for (Index i = 0; i < k; ++i) {
        const Index r = rs[i];
        auto g = gates_.row(r).array();
        auto gi = g.segment(0, u), gf = g.segment(u, u), gg = g.segment(2 * u, u), go = g.segment(3 * u, u);
        Eigen::Array<Scalar, 1, Eigen::Dynamic> dh_i = dh.row(bs[i]).array();
        if (has_seq) dh_i += d_sequence.row(r).array();
        const Eigen::Array<Scalar, 1, Eigen::Dynamic> tc = c_.row(r).array().tanh();
        const Eigen::Array<Scalar, 1, Eigen::Dynamic> dct = dc.row(bs[i]).array() + dh_i * go * (Scalar(1) - tc * tc);
        dz.row(i).segment(0, u) = (dct * gg * gi * (Scalar(1) - gi)).matrix();
        dz.row(i).segment(u, u) = (dct * c_prev_.row(r).array() * gf * (Scalar(1) - gf)).matrix();
        dz.row(i).segment(2 * u, u) = (dct * gi * (Scalar(1) - gg * gg)).matrix();
        dz.row(i).segment(3 * u, u) = (dh_i * tc * go * (Scalar(1) - go)).matrix();
        dc.row(bs[i]) = (dct * gf).matrix();
        dz_all.row(r) = dz.row(i);
      }
      RowMatrix<Scalar> dh_prev = dz * recurrent_.matrix().transpose();
      for (Index i = 0; i < k; ++i) dh.row(bs[i]) = dh_prev.row(i);
    }
    grad_kernel_.matrix().noalias() += x_.transpose() * dz_all;
    grad_recurrent_.matrix().noalias() += h_prev_.transpose() * dz_all;
    grad_bias_.values() += dz_all.colwise().sum().transpose();
    if (!need_input_grad) return {};
    return dz_all * kernel_.matrix().transpose();
  }

  Index in_features() const { return kernel_.dim(0); }
  Index units() const { return recurrent_.dim(0); }
  Tensor<Scalar>& kernel() { return kernel_; }
  Tensor<Scalar>& recurrent() { return recurrent_; }
  Tensor<Scalar>& bias() { return bias_; }

  void collect(std::vector<Parameter<Scalar>>& out, const std::string& prefix) {
    out.push_back({prefix + "/kernel", &kernel_, &grad_kernel_});
    out.push_back({prefix + "/recurrent", &recurrent_, &grad_recurrent_});
    out.push_back({prefix + "/bias", &bias_, &grad_bias_});
  }

 private:
  static void active_cells(const SequenceLayout& layout, Index t, std::vector<Index>& bs, std::vector<Index>& rs) {
    bs.clear();
    rs.clear();
    for (Index b = 0; b < layout.batch; ++b) {
      const Index r = layout.row(b, t);
      if (r >= 0) {
        bs.push_back(b);
        rs.push_back(r);
      }
    }
  }

  Tensor<Scalar> kernel_, recurrent_, bias_, grad_kernel_, grad_recurrent_, grad_bias_;
  SequenceLayout layout_;
  RowMatrix<Scalar> x_, gates_, c_prev_, c_, h_prev_;
};

template <typename Scalar>
struct LstmSequenceResult {
  RowMatrix<Scalar> final_state;  // (batch, units)
  Tensor<Scalar> sequence;        // (batch, steps, units); masked steps repeat the carried state
};

/// Runs an LSTM over a full (B, T, D) input under a (B, T) mask.
template <typename Scalar>
LstmSequenceResult<Scalar> lstm_layer(Lstm<Scalar>& layer, const Tensor<Scalar>& steps, const MaskMatrix& mask) {
  if (steps.rank() != 3) throw std::invalid_argument("lstm_layer expects a (batch, steps, features) tensor");
  const Index b = steps.dim(0), t = steps.dim(1), d = steps.dim(2);
  if (mask.rows() != b || mask.cols() != t) throw std::invalid_argument("mask length must equal the step count");
  if (d != layer.in_features()) throw std::invalid_argument("lstm input width does not match its weights");
  const SequenceLayout layout = SequenceLayout::from_mask(mask);
  RowMatrix<Scalar> compact(layout.active, d);
  for (Index i = 0; i < b; ++i) {
    for (Index s = 0; s < t; ++s) {
      if (layout.row(i, s) >= 0) {
        compact.row(layout.row(i, s)) = Eigen::Map<const RowVector<Scalar>>(steps.data() + (i * t + s) * d, d);
      }
    }
  }
  LstmOutput<Scalar> out = layer.forward(compact, layout);
  LstmSequenceResult<Scalar> result{out.final, Tensor<Scalar>({b, t, layer.units()})};
  for (Index i = 0; i < b; ++i) {
    RowVector<Scalar> carried = RowVector<Scalar>::Zero(layer.units());
    for (Index s = 0; s < t; ++s) {
      if (layout.row(i, s) >= 0) carried = out.sequence.row(layout.row(i, s));
      Eigen::Map<RowVector<Scalar>>(result.sequence.data() + (i * t + s) * layer.units(), layer.units()) = carried;
    }
  }
  return result;
}

}  // namespace fmsnet::nn
