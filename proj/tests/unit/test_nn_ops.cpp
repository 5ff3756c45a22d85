#include <doctest.h>

#include <cmath>
#include <limits>

#include "fmsnet/nn/adam.hpp"
#include "fmsnet/nn/init.hpp"
#include "fmsnet/nn/layers.hpp"
#include "fmsnet/nn/loss.hpp"
#include "support/gradcheck.hpp"

using namespace fmsnet;
using nn::Index;
using nn::Tensor;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Direct "same"-padded convolution, pad_before = (k - 1) / 2.
Tensor<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& k, const Tensor<double>& b) {
  const Index h = x.dim(0), w = x.dim(1), c = x.dim(2), kh = k.dim(0), kw = k.dim(1), f = k.dim(3);
  Tensor<double> y({h, w, f});
  for (Index oy = 0; oy < h; ++oy)
    for (Index ox = 0; ox < w; ++ox)
      for (Index of = 0; of < f; ++of) {
        double s = b[of];
        for (Index i = 0; i < kh; ++i)
          for (Index j = 0; j < kw; ++j)
            for (Index ch = 0; ch < c; ++ch) {
              const Index iy = oy + i - (kh - 1) / 2, ix = ox + j - (kw - 1) / 2;
              if (iy >= 0 && iy < h && ix >= 0 && ix < w) s += x(iy, ix, ch) * k(i, j, ch, of);
            }
        y(oy, ox, of) = s;
      }
  return y;
}

}  // namespace

TEST_CASE("glorot uniform bounds and determinism") {
  CHECK(nn::glorot_bound(3, 3) == 1.0);
  auto a = nn::glorot_uniform_init<double>(4, 5, {4, 5}, 7);
  auto b = nn::glorot_uniform_init<double>(4, 5, {4, 5}, 7);
  CHECK(a.values() == b.values());
  CHECK_THROWS_AS(nn::glorot_uniform_init<double>(0, 3, {1}, 1), std::invalid_argument);

  const Index n = 200000;
  auto big = nn::glorot_uniform_init<double>(102, 16, {n}, 11);
  const double bound = std::sqrt(6.0 / 118.0);
  CHECK(bound == doctest::Approx(0.2255).epsilon(1e-3));
  CHECK(big.values().cwiseAbs().maxCoeff() <= bound);
  // Uniform on [-L, L] has sd L / sqrt(3); the sample mean sits within 4 standard errors of 0.
  const double se = bound / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(big.values().mean()) < 4 * se);
  CHECK(big.values().cwiseAbs().maxCoeff() > 0.99 * bound);
}

TEST_CASE("conv2d examples") {
  Tensor<double> ones({2, 2, 1}, 1.0), k({2, 2, 1, 1}, 1.0), bias({1});
  auto y = nn::conv2d(ones, k, bias, nn::Activation::linear);
  CHECK(y.shape() == nn::Shape{2, 2, 1});
  // pad_before = 0 for a 2-wide kernel, so the kernel fully overlaps at (0, 0).
  CHECK(y(0, 0, 0) == 4.0);

  Tensor<double> zero_k({3, 3, 1, 2}), b2({2});
  b2[0] = 0.5;
  b2[1] = -1.5;
  nn::Rng rng(3);
  auto x = testing::random_tensor({4, 5, 1}, rng);
  auto yb = nn::conv2d(x, zero_k, b2, nn::Activation::linear);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 5; ++j) {
      CHECK(yb(i, j, 0) == 0.5);
      CHECK(yb(i, j, 1) == -1.5);
    }

  Tensor<double> x2({3, 3, 2});
  CHECK_THROWS_AS(nn::conv2d(x2, zero_k, b2, nn::Activation::linear), std::invalid_argument);
}

TEST_CASE("conv2d matches nested-loop oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    nn::Rng rng(seed);
    auto x = testing::random_tensor({6, 6, 2}, rng);
    auto k = testing::random_tensor({3, 3, 2, 2}, rng);
    auto b = testing::random_tensor({2}, rng);
    auto y = nn::conv2d(x, k, b, nn::Activation::linear);
    auto ref = conv_oracle(x, k, b);
    CHECK((y.values() - ref.values()).cwiseAbs().maxCoeff() < 1e-12);

    auto k5 = testing::random_tensor({1, 5, 2, 3}, rng);
    auto b5 = testing::random_tensor({3}, rng);
    auto y5 = nn::conv2d(x, k5, b5, nn::Activation::elu);
    auto r5 = conv_oracle(x, k5, b5);
    for (Index i = 0; i < r5.size(); ++i) {
      const double z = r5[i];
      CHECK(std::abs(y5[i] - (z > 0 ? z : std::exp(z) - 1)) < 1e-12);
    }
  }
}

TEST_CASE("maxpool2d examples and oracle") {
  Tensor<double> a({2, 2});
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(1, 0) = 3;
  a(1, 1) = 4;
  auto p = nn::maxpool2d(a);
  CHECK(p.shape() == nn::Shape{1, 1});
  CHECK(p[0] == 4.0);

  Tensor<double> c({4, 6}, 2.5);
  auto pc = nn::maxpool2d(c);
  CHECK(pc.shape() == nn::Shape{2, 3});
  CHECK((pc.values().array() == 2.5).all());

  nn::Rng rng(9);
  auto x = testing::random_tensor({8, 10}, rng);
  auto px = nn::maxpool2d(x);
  REQUIRE(px.shape() == nn::Shape{4, 5});
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 5; ++j) {
      const double m = std::max({x(2 * i, 2 * j), x(2 * i + 1, 2 * j), x(2 * i, 2 * j + 1), x(2 * i + 1, 2 * j + 1)});
      CHECK(px(i, j) == m);
    }

  auto odd = nn::maxpool2d(testing::random_tensor({5, 7}, rng));
  CHECK(odd.shape() == nn::Shape{2, 3});
  auto thin = nn::maxpool2d(testing::random_tensor({1, 6}, rng));
  CHECK(thin.shape() == nn::Shape{1, 3});
}

TEST_CASE("lstm zero weights and full masking") {
  nn::Lstm<double> lstm(3, 4, 1);
  lstm.kernel().set_zero();
  lstm.recurrent().set_zero();
  nn::Rng rng(2);
  auto steps = testing::random_tensor({1, 1, 3}, rng);
  nn::MaskMatrix mask = nn::MaskMatrix::Constant(1, 1, true);
  auto out = nn::lstm_layer(lstm, steps, mask);
  CHECK(out.final_state.cwiseAbs().maxCoeff() == 0.0);

  nn::Lstm<double> random_lstm(3, 4, 5);
  auto seq = testing::random_tensor({2, 4, 3}, rng);
  nn::MaskMatrix none = nn::MaskMatrix::Constant(2, 4, false);
  auto masked = nn::lstm_layer(random_lstm, seq, none);
  CHECK(masked.final_state.cwiseAbs().maxCoeff() == 0.0);
  CHECK(masked.sequence.values().cwiseAbs().maxCoeff() == 0.0);

  nn::MaskMatrix wrong = nn::MaskMatrix::Constant(2, 3, true);
  CHECK_THROWS_AS(nn::lstm_layer(random_lstm, seq, wrong), std::invalid_argument);
  auto bad_width = testing::random_tensor({2, 4, 5}, rng);
  CHECK_THROWS_AS(nn::lstm_layer(random_lstm, bad_width, none), std::invalid_argument);
}

TEST_CASE("scalar lstm matches gate-equation oracle") {
  nn::Lstm<double> lstm(1, 1, 0);
  const double wk[4] = {0.5, -0.3, 0.8, 0.2}, wr[4] = {0.1, 0.4, -0.6, 0.7}, wb[4] = {0.05, 1.0, -0.1, 0.2};
  for (int g = 0; g < 4; ++g) {
    lstm.kernel()[g] = wk[g];
    lstm.recurrent()[g] = wr[g];
    lstm.bias()[g] = wb[g];
  }
  const double xs[3] = {0.9, -1.2, 0.4};
  Tensor<double> steps({1, 3, 1});
  for (int t = 0; t < 3; ++t) steps[t] = xs[t];
  nn::MaskMatrix mask = nn::MaskMatrix::Constant(1, 3, true);
  auto out = nn::lstm_layer(lstm, steps, mask);

  double h = 0, c = 0;
  for (int t = 0; t < 3; ++t) {
    const double i = sigmoid(wk[0] * xs[t] + wr[0] * h + wb[0]);
    const double f = sigmoid(wk[1] * xs[t] + wr[1] * h + wb[1]);
    const double g = std::tanh(wk[2] * xs[t] + wr[2] * h + wb[2]);
    const double o = sigmoid(wk[3] * xs[t] + wr[3] * h + wb[3]);
    c = f * c + i * g;
    h = o * std::tanh(c);
    CHECK(std::abs(out.sequence(0, t, 0) - h) < 1e-12);
  }
  CHECK(std::abs(out.final_state(0, 0) - h) < 1e-12);

  // Masking the middle step carries (h, c) across it unchanged.
  mask(0, 1) = false;
  auto skipped = nn::lstm_layer(lstm, steps, mask);
  CHECK(skipped.sequence(0, 1, 0) == skipped.sequence(0, 0, 0));
}

TEST_CASE("softmax cross-entropy") {
  nn::RowMatrix<double> uniform = nn::RowMatrix<double>::Zero(1, 3);
  const int label0[] = {0};
  auto u = nn::softmax_crossentropy<double>(uniform, label0);
  CHECK(std::abs(u.loss - std::log(3.0)) < 1e-15);

  nn::Vector<double> big(3), onehot(3);
  big << 50, 0, 0;
  onehot << 1, 0, 0;
  auto l = nn::softmax_crossentropy<double>(big, onehot);
  CHECK(l.loss < 1e-20);
  CHECK(l.loss >= 0.0);
  nn::Vector<double> not_onehot(3);
  not_onehot << 1, 1, 0;
  CHECK_THROWS_AS(nn::softmax_crossentropy<double>(big, not_onehot), std::invalid_argument);
  nn::Vector<double> nan_logits(3);
  nan_logits << std::numeric_limits<double>::quiet_NaN(), 0, 0;
  CHECK_THROWS_AS(nn::softmax_crossentropy<double>(nan_logits, onehot), nn::NumericError);

  nn::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    nn::RowMatrix<double> logits(4, 3);
    for (Index i = 0; i < logits.size(); ++i) logits.data()[i] = 6.0 * (rng.uniform() - 0.5);
    const int labels[] = {0, 2, 1, 2};
    auto ce = nn::softmax_crossentropy<double>(logits, labels);
    for (Index r = 0; r < 4; ++r) {
      CHECK(std::abs(ce.probs.row(r).sum() - 1.0) < 1e-9);
      CHECK((ce.probs.row(r).array() >= 0).all());
    }
    for (Index i = 0; i < logits.size(); ++i) {
      nn::RowMatrix<double> up = logits, down = logits;
      up.data()[i] += testing::kFdStep;
      down.data()[i] -= testing::kFdStep;
      const double numeric = (nn::softmax_crossentropy<double>(up, labels).loss -
                              nn::softmax_crossentropy<double>(down, labels).loss) /
                             (2 * testing::kFdStep);
      CHECK(testing::relative_error(ce.dlogits.data()[i], numeric) < 1e-6);
    }
  }
}

TEST_CASE("adam steps") {
  Tensor<double> x({1}, 0.0), g({1}, 1.0);
  std::vector<nn::Parameter<double>> params{{"x", &x, &g}};
  nn::OptimizerState<double> state;
  nn::adam_step<double>(params, state);
  CHECK(state.step == 1);
  CHECK(std::abs(x[0] + 1e-4) < 1e-10);

  Tensor<double> y({3}, 2.0), gz({3});
  std::vector<nn::Parameter<double>> zero_params{{"y", &y, &gz}};
  nn::OptimizerState<double> zero_state;
  for (int i = 0; i < 5; ++i) nn::adam_step<double>(zero_params, zero_state);
  CHECK((y.values().array() == 2.0).all());

  // f(x) = x^2 from x = 1 against a scalar reference trace.
  Tensor<double> p({1}, 1.0), gp({1});
  std::vector<nn::Parameter<double>> quad{{"p", &p, &gp}};
  nn::OptimizerState<double> qs;
  double rx = 1.0, m = 0.0, v = 0.0, prev = 1.0;
  for (int t = 1; t <= 10; ++t) {
    gp[0] = 2 * p[0];
    nn::adam_step<double>(quad, qs);
    const double rg = 2 * rx;
    m = 0.9 * m + 0.1 * rg;
    v = 0.999 * v + 0.001 * rg * rg;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    rx -= 1e-4 * mh / (std::sqrt(vh) + 1e-7);
    CHECK(std::abs(p[0] - rx) < 1e-12);
    CHECK(std::abs(p[0]) < prev);
    prev = std::abs(p[0]);
  }
  CHECK(qs.step == 10);

  gp[0] = std::numeric_limits<double>::infinity();
  const double before = p[0];
  CHECK_THROWS_WITH_AS(nn::adam_step<double>(quad, qs), doctest::Contains("p"), nn::NumericError);
  CHECK(p[0] == before);
  CHECK(qs.step == 10);
}

TEST_CASE("dense, dropout and batchnorm forward contracts") {
  nn::Dense<double> dense(3, 2, nn::Activation::relu, 1);
  dense.weights().set_zero();
  dense.bias()[0] = -1.0;
  dense.bias()[1] = 2.0;
  nn::RowMatrix<double> x = nn::RowMatrix<double>::Ones(2, 3);
  auto y = dense.forward(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(1, 1) == 2.0);
  CHECK_THROWS_AS(dense.forward(nn::RowMatrix<double>::Ones(2, 4)), std::invalid_argument);

  nn::Rng rng(8);
  auto t = testing::random_tensor({4, 3, 5, 2}, rng);
  nn::Dropout<double> drop(0.2, 3);
  auto same = drop.forward(t, false, 17);
  CHECK(same.values() == t.values());
  auto d1 = drop.forward(t, true, 17);
  auto d2 = drop.forward(t, true, 17);
  auto d3 = drop.forward(t, true, 18);
  CHECK(d1.values() == d2.values());
  CHECK(d1.values() != d3.values());
  for (Index i = 0; i < t.size(); ++i) {
    CHECK((d1[i] == 0.0 || std::abs(d1[i] - t[i] / 0.8) < 1e-15));
  }
  CHECK_THROWS_AS(nn::Dropout<double>(1.0, 0), std::invalid_argument);

  // Large-sample keep rate sits within 4 sigma of 0.8.
  Tensor<double> ones({100000}, 1.0);
  auto kept = drop.forward(ones, true, 1);
  const double rate = (kept.values().array() != 0.0).cast<double>().mean();
  CHECK(std::abs(rate - 0.8) < 4 * std::sqrt(0.16 / 100000));

  nn::BatchNorm<double> bn(2);
  auto xb = testing::random_tensor({6, 2, 2, 2}, rng, 3.0);
  auto yb = bn.forward(xb, true);
  auto ym = yb.matrix(24, 2);
  for (Index c = 0; c < 2; ++c) {
    CHECK(std::abs(ym.col(c).mean()) < 1e-12);
    const double var = (ym.col(c).array() - ym.col(c).mean()).square().mean();
    const double xvar = (xb.matrix(24, 2).col(c).array() - xb.matrix(24, 2).col(c).mean()).square().mean();
    CHECK(std::abs(var - xvar / (xvar + 1e-3)) < 1e-12);
  }
  // Inference uses running statistics: after one update they are 0.01 of the batch statistics.
  bn.running_mean().values() << 0.5, -0.5;
  bn.running_var().values() << 4.0, 0.25;
  auto yi = bn.forward(xb, false);
  for (Index r = 0; r < 24; ++r) {
    CHECK(std::abs(yi.matrix(24, 2)(r, 0) - (xb.matrix(24, 2)(r, 0) - 0.5) / std::sqrt(4.001)) < 1e-12);
    CHECK(std::abs(yi.matrix(24, 2)(r, 1) - (xb.matrix(24, 2)(r, 1) + 0.5) / std::sqrt(0.251)) < 1e-12);
  }
  auto yi2 = bn.forward(xb, false);
  CHECK(yi.values() == yi2.values());
}

TEST_CASE("activation kinds") {
  Eigen::ArrayXd z(4);
  z << -2.0, -0.5, 0.0, 1.5;
  auto relu = nn::activate(nn::Activation::relu, z);
  auto elu = nn::activate(nn::Activation::elu, z);
  auto lrelu = nn::activate(nn::Activation::lrelu, z);
  CHECK(relu[0] == 0.0);
  CHECK(relu[3] == 1.5);
  CHECK(elu[0] == doctest::Approx(std::exp(-2.0) - 1.0));
  CHECK(elu[3] == 1.5);
  CHECK(lrelu[1] == doctest::Approx(-0.005));
  CHECK(lrelu[3] == 1.5);
  for (auto a : {nn::Activation::relu, nn::Activation::elu, nn::Activation::lrelu, nn::Activation::tanh,
                 nn::Activation::sigmoid, nn::Activation::linear}) {
    CHECK(nn::activation_from_string(nn::to_string(a)) == a);
    Eigen::ArrayXd pts(3);
    pts << -1.3, 0.4, 2.2;
    auto d = nn::activation_derivative(a, pts);
    for (Index i = 0; i < 3; ++i) {
      Eigen::ArrayXd up = pts, down = pts;
      up[i] += 1e-6;
      down[i] -= 1e-6;
      const double numeric = (nn::activate(a, up)[i] - nn::activate(a, down)[i]) / 2e-6;
      CHECK(std::abs(d[i] - numeric) < 1e-8);
    }
  }
  CHECK_THROWS(nn::activation_from_string("swish"));
}

TEST_CASE("tensor invariants") {
  Tensor<double> t({2, 3, 4});
  CHECK(t.size() == 24);
  t(1, 2, 3) = 5.0;
  CHECK(t[23] == 5.0);
  CHECK_THROWS_AS(t.reshape({5, 5}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, nn::Vector<double>::Zero(3)), std::invalid_argument);
  t[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}
