#include "fmsnet/nn/network.hpp"

#include <stdexcept>

namespace fmsnet::nn {

namespace {

std::string block_prefix(std::size_t branch, std::size_t block) {
  return "branch" + std::to_string(branch) + "/block" + std::to_string(block);
}

std::string to_string(Regularization r) { return r == Regularization::dropout ? "dropout" : "batchnorm"; }

Regularization regularization_from_string(const std::string& s) {
  if (s == "dropout") return Regularization::dropout;
  if (s == "batchnorm") return Regularization::batchnorm;
  throw std::invalid_argument("unknown regularization '" + s + "'");
}

}  // namespace

void Topology::validate() const {
  if (rows < 1 || window_length < 1) throw std::invalid_argument("topology needs positive window geometry");
  if (max_windows < 1) throw std::invalid_argument("topology needs at least one window");
  if (branches.empty()) throw std::invalid_argument("topology needs at least one CNN branch");
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto& br = branches[k];
    if (br.row_count < 1 || br.row_begin < 0 || br.row_begin + br.row_count > rows) {
      throw std::invalid_argument("branch " + std::to_string(k) + " reads rows outside the input");
    }
    if (br.blocks.empty()) throw std::invalid_argument("branch " + std::to_string(k) + " has no CNN blocks");
    for (const auto& b : br.blocks) {
      if (b.kernel_h < 1 || b.kernel_w < 1) throw std::invalid_argument("kernel dims must be >= 1");
      if (b.filters < 1) throw std::invalid_argument("filter count must be >= 1");
      if (b.regularization == Regularization::dropout && !(b.dropout_rate >= 0.0 && b.dropout_rate < 1.0)) {
        throw std::invalid_argument("dropout rate must lie in [0, 1)");
      }
    }
  }
  if (lstm_units.empty()) throw std::invalid_argument("topology needs at least one LSTM layer");
  for (Index u : lstm_units) {
    if (u < 1) throw std::invalid_argument("LSTM units must be >= 1");
  }
  for (Index u : dense_units) {
    if (u < 1) throw std::invalid_argument("dense units must be >= 1");
  }
  if (classes < 2) throw std::invalid_argument("need at least two classes");
}

Shape Topology::branch_output_shape(std::size_t k) const {
  const auto& br = branches.at(k);
  Index h = br.row_count, w = window_length, c = 1;
  for (const auto& b : br.blocks) {
    c = b.filters;
    h /= pool_extent(h);
    w /= pool_extent(w);
  }
  return {h, w, c};
}

Index Topology::feature_width() const {
  Index total = 0;
  for (std::size_t k = 0; k < branches.size(); ++k) total += shape_size(branch_output_shape(k));
  return total;
}

std::vector<LayerSpec> Topology::layer_specs() const {
  std::vector<LayerSpec> specs;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto& br = branches[k];
    Index h = br.row_count, w = window_length, c = 1;
    for (std::size_t j = 0; j < br.blocks.size(); ++j) {
      const auto& b = br.blocks[j];
      const std::string prefix = block_prefix(k, j);
      LayerSpec conv{.kind = LayerKind::conv2d, .name = prefix + "/conv2d", .filters = b.filters,
                     .kernel_h = b.kernel_h, .kernel_w = b.kernel_w, .in_channels = c,
                     .activation = b.activation, .output_shape = {h, w, b.filters}};
      specs.push_back(conv);
      c = b.filters;
      h /= pool_extent(h);
      w /= pool_extent(w);
      specs.push_back({.kind = LayerKind::maxpool2d, .name = prefix + "/maxpool2d", .output_shape = {h, w, c}});
      if (b.regularization == Regularization::dropout) {
        specs.push_back(
            {.kind = LayerKind::dropout, .name = prefix + "/dropout", .rate = b.dropout_rate, .output_shape = {h, w, c}});
      } else {
        specs.push_back(
            {.kind = LayerKind::batchnorm, .name = prefix + "/batchnorm", .in_channels = c, .output_shape = {h, w, c}});
      }
    }
  }
  Index width = feature_width();
  specs.push_back({.kind = LayerKind::masking, .name = "masking", .output_shape = {width}});
  for (std::size_t l = 0; l < lstm_units.size(); ++l) {
    specs.push_back({.kind = LayerKind::lstm, .name = "lstm" + std::to_string(l), .in_features = width,
                     .units = lstm_units[l], .activation = Activation::tanh,
                     .return_sequences = l + 1 < lstm_units.size(), .output_shape = {lstm_units[l]}});
    width = lstm_units[l];
  }
  for (std::size_t d = 0; d <= dense_units.size(); ++d) {
    const bool last = d == dense_units.size();
    const Index units = last ? classes : dense_units[d];
    specs.push_back({.kind = LayerKind::dense, .name = "dense" + std::to_string(d), .in_features = width,
                     .units = units, .activation = last ? Activation::linear : dense_activation,
                     .output_shape = {units}});
    width = units;
  }
  specs.push_back({.kind = LayerKind::softmax, .name = "softmax", .output_shape = {classes}});
  return specs;
}

nlohmann::json to_json(const Topology& t) {
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& br : t.branches) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : br.blocks) {
      blocks.push_back({{"filters", b.filters},
                        {"kernel", {b.kernel_h, b.kernel_w}},
                        {"activation", to_string(b.activation)},
                        {"regularization", to_string(b.regularization)},
                        {"dropout_rate", b.dropout_rate}});
    }
    branches.push_back({{"row_begin", br.row_begin}, {"row_count", br.row_count}, {"blocks", blocks}});
  }
  return {{"rows", t.rows},
          {"window_length", t.window_length},
          {"max_windows", t.max_windows},
          {"branches", branches},
          {"lstm_units", t.lstm_units},
          {"dense_units", t.dense_units},
          {"dense_activation", to_string(t.dense_activation)},
          {"classes", t.classes},
          {"seed", t.seed}};
}

Topology topology_from_json(const nlohmann::json& j) {
  Topology t;
  t.rows = j.at("rows").get<Index>();
  t.window_length = j.at("window_length").get<Index>();
  t.max_windows = j.at("max_windows").get<Index>();
  for (const auto& jb : j.at("branches")) {
    BranchSpec br;
    br.row_begin = jb.at("row_begin").get<Index>();
    br.row_count = jb.at("row_count").get<Index>();
    for (const auto& jk : jb.at("blocks")) {
      ConvBlockSpec b;
      b.filters = jk.at("filters").get<Index>();
      b.kernel_h = jk.at("kernel").at(0).get<Index>();
      b.kernel_w = jk.at("kernel").at(1).get<Index>();
      b.activation = activation_from_string(jk.at("activation").get<std::string>());
      b.regularization = regularization_from_string(jk.at("regularization").get<std::string>());
      b.dropout_rate = jk.at("dropout_rate").get<double>();
      br.blocks.push_back(b);
    }
    t.branches.push_back(std::move(br));
  }
  t.lstm_units = j.at("lstm_units").get<std::vector<Index>>();
  t.dense_units = j.at("dense_units").get<std::vector<Index>>();
  t.dense_activation = activation_from_string(j.at("dense_activation").get<std::string>());
  t.classes = j.at("classes").get<Index>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.validate();
  return t;
}

template <typename Scalar>
Network<Scalar>::Network(Topology topology) : topology_(std::move(topology)) {
  topology_.validate();
  std::uint64_t salt = 0;
  auto next_seed = [&] { return mix_seed(topology_.seed, salt++); };
  for (const auto& spec : topology_.branches) {
    Branch br{spec, {}, {}, 0};
    Index c = 1;
    for (const auto& b : spec.blocks) {
      Block block{Conv2d<Scalar>(b.kernel_h, b.kernel_w, c, b.filters, b.activation, next_seed()), {}, {}, {}};
      if (b.regularization == Regularization::dropout) {
        block.dropout.emplace(b.dropout_rate, next_seed());
      } else {
        block.batchnorm.emplace(b.filters);
      }
      br.blocks.push_back(std::move(block));
      c = b.filters;
    }
    branches_.push_back(std::move(br));
  }
  Index width = topology_.feature_width();
  for (Index units : topology_.lstm_units) {
    lstms_.emplace_back(width, units, next_seed());
    width = units;
  }
  for (Index units : topology_.dense_units) {
    dense_.emplace_back(width, units, topology_.dense_activation, next_seed());
    width = units;
  }
  dense_.emplace_back(width, topology_.classes, Activation::linear, next_seed());
}

template <typename Scalar>
void Network<Scalar>::check_batch(const Batch<Scalar>& batch) const {
  const auto& w = batch.windows;
  if (w.rank() != 4 || w.dim(2) != topology_.rows || w.dim(3) != topology_.window_length) {
    throw std::invalid_argument("batch windows " + shape_to_string(w.shape()) + " do not match the model input (B, X, " +
                                std::to_string(topology_.rows) + ", " + std::to_string(topology_.window_length) + ")");
  }
  if (batch.mask.rows() != w.dim(0) || batch.mask.cols() != w.dim(1)) {
    throw std::invalid_argument("batch mask shape does not match its windows");
  }
  for (Index b = 0; b < batch.mask.rows(); ++b) {
    for (Index t = topology_.max_windows; t < batch.mask.cols(); ++t) {
      if (batch.mask(b, t)) {
        throw std::invalid_argument("window count mismatch: unmasked window " + std::to_string(t) +
                                    " exceeds the configured " + std::to_string(topology_.max_windows) + " windows");
      }
    }
  }
}

template <typename Scalar>
RowMatrix<Scalar> Network<Scalar>::forward(const Batch<Scalar>& batch, Mode mode, std::uint64_t step_seed) {
  check_batch(batch);
  const bool training = mode == Mode::training;
  layout_ = SequenceLayout::from_mask(batch.mask);
  const Index n = layout_.active;
  const Index steps = batch.windows.dim(1), rows = topology_.rows, len = topology_.window_length;

  RowMatrix<Scalar> features(n, topology_.feature_width());
  Index offset = 0;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    Branch& br = branches_[k];
    Tensor<Scalar> x({n, br.spec.row_count, len, 1});
    for (Index b = 0; b < layout_.batch; ++b) {
      for (Index t = 0; t < steps; ++t) {
        const Index r = layout_.row(b, t);
        if (r < 0) continue;
        const Scalar* src = batch.windows.data() + ((b * steps + t) * rows + br.spec.row_begin) * len;
        std::copy(src, src + br.spec.row_count * len, x.data() + r * br.spec.row_count * len);
      }
    }
    for (std::size_t j = 0; j < br.blocks.size(); ++j) {
      Block& blk = br.blocks[j];
      x = blk.pool.forward(blk.conv.forward(x));
      if (blk.dropout) {
        x = blk.dropout->forward(x, training, mix_seed(step_seed, k * 64 + j));
      } else {
        x = blk.batchnorm->forward(x, training);
      }
    }
    br.output_shape = x.shape();
    br.width = n > 0 ? x.size() / n : shape_size(topology_.branch_output_shape(k));
    if (n > 0) features.middleCols(offset, br.width) = x.matrix(n, br.width);
    offset += br.width;
  }

  RowMatrix<Scalar> seq = std::move(features);
  RowMatrix<Scalar> state;
  for (auto& lstm : lstms_) {
    LstmOutput<Scalar> out = lstm.forward(seq, layout_);
    seq = std::move(out.sequence);
    state = std::move(out.final);
  }
  for (auto& d : dense_) state = d.forward(state);
  if (!state.allFinite()) throw NumericError("network produced non-finite logits");
  return state;
}

template <typename Scalar>
void Network<Scalar>::backward(const RowMatrix<Scalar>& dlogits) {
  RowMatrix<Scalar> d = dlogits;
  for (auto it = dense_.rbegin(); it != dense_.rend(); ++it) d = it->backward(d);
  RowMatrix<Scalar> d_seq;  // empty: the top LSTM only feeds its final state
  RowMatrix<Scalar> d_final = std::move(d);
  for (std::size_t l = lstms_.size(); l-- > 0;) {
    d_seq = lstms_[l].backward(d_seq, d_final);
    d_final = RowMatrix<Scalar>::Zero(layout_.batch, l > 0 ? lstms_[l - 1].units() : 0);
  }
  const Index n = layout_.active;
  Index offset = 0;
  for (auto& br : branches_) {
    Tensor<Scalar> dx(br.output_shape);
    if (n > 0) dx.matrix(n, br.width) = d_seq.middleCols(offset, br.width);
    offset += br.width;
    for (std::size_t j = br.blocks.size(); j-- > 0;) {
      Block& blk = br.blocks[j];
      dx = blk.dropout ? blk.dropout->backward(dx) : blk.batchnorm->backward(dx);
      dx = blk.conv.backward(blk.pool.backward(dx), j > 0);
    }
  }
}

template <typename Scalar>
CrossEntropyResult<Scalar> Network<Scalar>::compute_gradients(const Batch<Scalar>& batch, std::uint64_t step_seed) {
  zero_grad();
  CrossEntropyResult<Scalar> ce = softmax_crossentropy<Scalar>(forward(batch, Mode::training, step_seed), batch.labels);
  if (!std::isfinite(static_cast<double>(ce.loss))) throw NumericError("non-finite training loss");
  backward(ce.dlogits);
  return ce;
}

template <typename Scalar>
std::vector<Parameter<Scalar>> Network<Scalar>::parameters() {
  std::vector<Parameter<Scalar>> out;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    for (std::size_t j = 0; j < branches_[k].blocks.size(); ++j) {
      Block& blk = branches_[k].blocks[j];
      blk.conv.collect(out, block_prefix(k, j) + "/conv2d");
      if (blk.batchnorm) blk.batchnorm->collect(out, block_prefix(k, j) + "/batchnorm");
    }
  }
  for (std::size_t l = 0; l < lstms_.size(); ++l) lstms_[l].collect(out, "lstm" + std::to_string(l));
  for (std::size_t d = 0; d < dense_.size(); ++d) dense_[d].collect(out, "dense" + std::to_string(d));
  return out;
}

template <typename Scalar>
std::vector<std::pair<std::string, Tensor<Scalar>*>> Network<Scalar>::state_tensors() {
  std::vector<std::pair<std::string, Tensor<Scalar>*>> out;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    for (std::size_t j = 0; j < branches_[k].blocks.size(); ++j) {
      Block& blk = branches_[k].blocks[j];
      if (!blk.batchnorm) continue;
      out.emplace_back(block_prefix(k, j) + "/batchnorm/running_mean", &blk.batchnorm->running_mean());
      out.emplace_back(block_prefix(k, j) + "/batchnorm/running_var", &blk.batchnorm->running_var());
    }
  }
  return out;
}

template <typename Scalar>
void Network<Scalar>::zero_grad() {
  for (auto& p : parameters()) p.grad->set_zero();
}

template <typename Scalar>
Index Network<Scalar>::trainable_parameter_count() {
  Index total = 0;
  for (auto& p : parameters()) total += p.value->size();
  return total;
}

template class Network<double>;
template class Network<float>;

}  // namespace fmsnet::nn
