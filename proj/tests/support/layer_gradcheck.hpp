#pragma once

// Seeded finite-difference checks of each layer in isolation. The loss is a fixed random
// linear functional of the layer output, so d(loss)/d(output) is the weight tensor itself.

#include <cstdint>

#include "fmsnet/nn/layers.hpp"
#include "fmsnet/nn/loss.hpp"
#include "support/gradcheck.hpp"

namespace fmsnet::testing {

inline double dot(const nn::Tensor<double>& a, const nn::Tensor<double>& b) { return a.values().dot(b.values()); }

inline nn::Activation pick_activation(nn::Rng& rng) {
  static constexpr nn::Activation kinds[] = {nn::Activation::relu, nn::Activation::elu, nn::Activation::lrelu,
                                             nn::Activation::tanh, nn::Activation::linear};
  return kinds[rng.below(5)];
}

inline GradCheckResult check_conv2d(std::uint64_t seed) {
  nn::Rng rng(seed);
  const nn::Index n = 1 + rng.below(2), h = 2 + rng.below(5), w = 3 + rng.below(6), c = 1 + rng.below(3);
  const nn::Index kh = 1 + rng.below(std::min<nn::Index>(h, 5)), kw = 1 + rng.below(5), f = 1 + rng.below(4);
  nn::Conv2d<double> conv(kh, kw, c, f, pick_activation(rng), seed);
  conv.bias() = random_tensor({f}, rng, 0.3);
  nn::Tensor<double> x = random_tensor({n, h, w, c}, rng);
  const nn::Tensor<double> weight = random_tensor({n, h, w, f}, rng);

  std::vector<nn::Parameter<double>> params;
  conv.collect(params, "conv2d");
  auto loss = [&] { return dot(conv.forward(x), weight); };
  loss();
  for (auto& p : params) p.grad->set_zero();
  const nn::Tensor<double> grad_x = conv.backward(weight, true);
  GradCheckResult r;
  check_tensor(*params[0].value, nn::Tensor<double>(*params[0].grad), loss, "conv2d/kernel", r);
  check_tensor(*params[1].value, nn::Tensor<double>(*params[1].grad), loss, "conv2d/bias", r);
  check_tensor(x, grad_x, loss, "conv2d/input", r);
  return r;
}

inline GradCheckResult check_maxpool(std::uint64_t seed) {
  nn::Rng rng(seed);
  const nn::Index n = 1 + rng.below(2), h = 1 + rng.below(7), w = 1 + rng.below(9), c = 1 + rng.below(3);
  nn::MaxPool2d<double> pool;
  nn::Tensor<double> x = random_tensor({n, h, w, c}, rng);
  const nn::Tensor<double> weight = random_tensor(nn::MaxPool2d<double>::output_shape(x.shape()), rng);
  auto loss = [&] { return dot(pool.forward(x), weight); };
  loss();
  const nn::Tensor<double> grad_x = pool.backward(weight);
  GradCheckResult r;
  check_tensor(x, grad_x, loss, "maxpool2d/input", r);
  return r;
}

inline GradCheckResult check_dropout(std::uint64_t seed) {
  nn::Rng rng(seed);
  nn::Dropout<double> drop(0.2, seed);
  nn::Tensor<double> x = random_tensor({2, 3, 4, 2}, rng);
  const nn::Tensor<double> weight = random_tensor(x.shape(), rng);
  auto loss = [&] { return dot(drop.forward(x, true, 99), weight); };
  loss();
  const nn::Tensor<double> grad_x = drop.backward(weight);
  GradCheckResult r;
  check_tensor(x, grad_x, loss, "dropout/input", r);
  return r;
}

inline GradCheckResult check_batchnorm(std::uint64_t seed, bool training = true) {
  nn::Rng rng(seed);
  const nn::Index c = 1 + rng.below(4);
  nn::BatchNorm<double> bn(c);
  std::vector<nn::Parameter<double>> params;
  bn.collect(params, "batchnorm");
  *params[0].value = random_tensor({c}, rng);
  *params[1].value = random_tensor({c}, rng);
  nn::Tensor<double> x = random_tensor({2 + static_cast<nn::Index>(rng.below(3)), 2, 3, c}, rng, 2.0);
  if (!training) {
    bn.running_mean() = random_tensor({c}, rng);
    bn.running_var().values().setConstant(0.7);
  }
  const nn::Tensor<double> weight = random_tensor(x.shape(), rng);
  auto loss = [&] { return dot(bn.forward(x, training), weight); };
  loss();
  for (auto& p : params) p.grad->set_zero();
  const nn::Tensor<double> grad_x = bn.backward(weight);
  GradCheckResult r;
  check_tensor(*params[0].value, nn::Tensor<double>(*params[0].grad), loss, "batchnorm/gamma", r);
  check_tensor(*params[1].value, nn::Tensor<double>(*params[1].grad), loss, "batchnorm/beta", r);
  check_tensor(x, grad_x, loss, "batchnorm/input", r);
  return r;
}

inline GradCheckResult check_dense(std::uint64_t seed) {
  nn::Rng rng(seed);
  const nn::Index b = 1 + rng.below(4), in = 1 + rng.below(6), out = 1 + rng.below(5);
  nn::Dense<double> dense(in, out, pick_activation(rng), seed);
  dense.bias() = random_tensor({out}, rng, 0.3);
  nn::Tensor<double> x = random_tensor({b, in}, rng);
  const nn::Tensor<double> weight = random_tensor({b, out}, rng);
  std::vector<nn::Parameter<double>> params;
  dense.collect(params, "dense");
  auto loss = [&] { return dense.forward(x.matrix()).cwiseProduct(weight.matrix()).sum(); };
  loss();
  for (auto& p : params) p.grad->set_zero();
  nn::Tensor<double> grad_x({b, in});
  grad_x.matrix() = dense.backward(weight.matrix());
  GradCheckResult r;
  check_tensor(*params[0].value, nn::Tensor<double>(*params[0].grad), loss, "dense/weights", r);
  check_tensor(*params[1].value, nn::Tensor<double>(*params[1].grad), loss, "dense/bias", r);
  check_tensor(x, grad_x, loss, "dense/input", r);
  return r;
}

/// LSTM under a random mask; the loss reads both the step sequence and the final state.
inline GradCheckResult check_lstm(std::uint64_t seed) {
  nn::Rng rng(seed);
  const nn::Index b = 1 + rng.below(3), t = 1 + rng.below(4), d = 1 + rng.below(4), u = 1 + rng.below(4);
  nn::Lstm<double> lstm(d, u, seed);
  lstm.bias() = random_tensor({4 * u}, rng, 0.5);
  nn::MaskMatrix mask(b, t);
  for (nn::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < 0.7;
  const nn::SequenceLayout layout = nn::SequenceLayout::from_mask(mask);
  nn::Tensor<double> x = random_tensor({layout.active, d}, rng);
  if (layout.active == 0) return {};
  const nn::Tensor<double> w_seq = random_tensor({layout.active, u}, rng);
  const nn::Tensor<double> w_final = random_tensor({b, u}, rng);
  std::vector<nn::Parameter<double>> params;
  lstm.collect(params, "lstm");
  auto loss = [&] {
    auto out = lstm.forward(x.matrix(), layout);
    return out.sequence.cwiseProduct(w_seq.matrix()).sum() + out.final.cwiseProduct(w_final.matrix()).sum();
  };
  loss();
  for (auto& p : params) p.grad->set_zero();
  nn::Tensor<double> grad_x({layout.active, d});
  grad_x.matrix() = lstm.backward(w_seq.matrix(), w_final.matrix());
  GradCheckResult r;
  for (auto& p : params) check_tensor(*p.value, nn::Tensor<double>(*p.grad), loss, p.name, r);
  check_tensor(x, grad_x, loss, "lstm/input", r);
  return r;
}

inline GradCheckResult check_softmax_crossentropy(std::uint64_t seed) {
  nn::Rng rng(seed);
  const nn::Index b = 1 + rng.below(5);
  nn::Tensor<double> logits = random_tensor({b, 3}, rng, 4.0);
  std::vector<int> labels;
  for (nn::Index i = 0; i < b; ++i) labels.push_back(static_cast<int>(rng.below(3)));
  auto loss = [&] {
    nn::RowMatrix<double> m = logits.matrix();
    return nn::softmax_crossentropy<double>(m, labels).loss;
  };
  nn::RowMatrix<double> m = logits.matrix();
  nn::Tensor<double> grad({b, 3});
  grad.matrix() = nn::softmax_crossentropy<double>(m, labels).dlogits;
  GradCheckResult r;
  check_tensor(logits, grad, loss, "softmax_crossentropy/logits", r);
  return r;
}

}  // namespace fmsnet::testing
