// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "premov/error.hpp"
#include "premov/gradkit/adam.hpp"
#include "premov/gradkit/gradcheck.hpp"
#include "premov/gradkit/model.hpp"
#include "support.hpp"

using namespace premov;
using namespace premov::gradkit;

namespace {

Tensor random_tensor(testsupport::Gen& g, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = scale * g.normal();
  return t;
}

Var param(testsupport::Gen& g, Shape shape, double scale = 0.5) { return Var::leaf(random_tensor(g, shape, scale), true); }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no premov::Error thrown");
  return Errc::ConfigError;
}

// Checks one layer in isolation: the layer's own parameters plus its input.
GradCheckReport check_layer(const LayerSpec& spec, Shape input_shape, std::uint64_t seed) {
  testsupport::Gen g(seed);
  auto layer = make_layer(spec);
  std::mt19937_64 init(seed);
  layer->initialize(init);
  for (auto& p : layer->parameters())
    for (auto& v : p.var.mutable_value().values) v += 0.3 * g.normal();
  Var x = param(g, input_shape, 1.0);
  std::mt19937_64 probe(seed);
  const Shape out_shape = layer->forward(x, Mode::Eval, probe).shape();
  const Tensor weights = random_tensor(g, out_shape);
  auto loss = [&] {
    std::mt19937_64 rng(seed ^ 0xabc);
    return sum(mul(layer->forward(x, Mode::Train, rng), Var::leaf(weights)));
  };
  auto params = layer->parameters();
  params.push_back({"input", x});
  GradCheckOptions opt;
  opt.abs_floor = 1e-8;
  return grad_check(loss, params, opt);
}

}  // namespace

TEST_CASE("conv1d with kernel [1,0,-1] and same padding") {
  const Var x = Var::leaf(Tensor({1, 3, 1}, {1, 2, 3}));
  const Var w = Var::leaf(Tensor({3, 1, 1}, {1, 0, -1}));
  const Var b = Var::leaf(Tensor({1}, {0.0}));
  CHECK(conv1d_same(x, w, b).value().values == std::vector<double>{-2, -2, 2});
}

TEST_CASE("max pool and zero-weight LSTM") {
  const Var x = Var::leaf(Tensor({1, 5, 1}, {1, 3, 2, 5, 4}));
  CHECK(maxpool1d(x, 5).value().values == std::vector<double>{5});

  testsupport::Gen g(51);
  const Var seq = Var::leaf(random_tensor(g, {3, 7, 4}));
  const Var wx = Var::leaf(Tensor({4, 20})), wh = Var::leaf(Tensor({5, 20})), bias = Var::leaf(Tensor({20}));
  const auto h = lstm_last(seq, wx, wh, bias);
  CHECK(h.shape() == Shape{3, 5});
  for (double v : h.value().values) CHECK(v == 0.0);
}

TEST_CASE("backward of sum(w*x) is x and of mse at the target is zero") {
  testsupport::Gen g(52);
  Var w = param(g, {6});
  const Tensor x = random_tensor(g, {6});
  backward(sum(mul(w, Var::leaf(x))));
  CHECK(std::vector<double>(w.grad().begin(), w.grad().end()) == x.values);

  Var p = param(g, {2, 3});
  backward(mse(p, p.value()));
  for (double v : p.grad()) CHECK(v == 0.0);

  CHECK(code_of([&] { backward(Var::leaf(Tensor({1}, {1.0}), true)); }) == Errc::NoGraph);
}

TEST_CASE("shape mismatches and bad specs are ShapeErrors") {
  testsupport::Gen g(53);
  const Var a = param(g, {2, 3}), w = param(g, {4, 5}), b = param(g, {5});
  CHECK(code_of([&] { dense(a, w, b); }) == Errc::ShapeError);
  CHECK(code_of([&] { validate(DropoutSpec{1.0}); }) == Errc::ShapeError);
  CHECK(code_of([&] { validate(DenseSpec{0, 3}); }) == Errc::ShapeError);
  CHECK(code_of([&] { validate(Conv1dSpec{3, 4, 0}); }) == Errc::ShapeError);
  auto layer = make_layer(Conv1dSpec{3, 4, 3});
  std::mt19937_64 rng(1);
  layer->initialize(rng);
  CHECK(code_of([&] { layer->forward(Var::leaf(Tensor({2, 5, 2})), Mode::Eval, rng); }) == Errc::ShapeError);
}

TEST_CASE("every layer passes a finite-difference check in isolation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    CHECK(check_layer(DenseSpec{5, 4, Activation::Relu}, {3, 5}, seed).passed);
    CHECK(check_layer(DenseSpec{5, 4, Activation::Linear}, {3, 5}, seed).passed);
    CHECK(check_layer(Conv1dSpec{3, 4, 3, Activation::Relu}, {2, 9, 3}, seed).passed);
    CHECK(check_layer(Conv1dSpec{3, 2, 4, Activation::Linear}, {2, 6, 3}, seed).passed);
    CHECK(check_layer(MaxPool1dSpec{3}, {2, 10, 3}, seed).passed);
    CHECK(check_layer(BatchNormSpec{4}, {5, 4}, seed).passed);
    CHECK(check_layer(BatchNormSpec{3}, {2, 6, 3}, seed).passed);
    CHECK(check_layer(DropoutSpec{0.25}, {4, 6}, seed).passed);
    CHECK(check_layer(LstmSpec{3, 4, Activation::Linear}, {2, 5, 3}, seed).passed);
    CHECK(check_layer(LstmSpec{3, 4, Activation::Relu}, {2, 5, 3}, seed).passed);
  }
}

TEST_CASE("composed models pass; a sign-flipped backward fails with error near 2") {
  testsupport::Gen g(54);
  Sequential mlp({DenseSpec{6, 8, Activation::Relu}, DenseSpec{8, 2}}, 3);
  GradCheckOptions opt;
  opt.abs_floor = 1e-8;
  CHECK(grad_check(mlp, random_tensor(g, {5, 6}), random_tensor(g, {5, 2}), opt).passed);

  Sequential chain({Conv1dSpec{2, 6, 3, Activation::Relu}, MaxPool1dSpec{2}, LstmSpec{6, 4}, DenseSpec{4, 3}}, 4);
  CHECK(grad_check(chain, random_tensor(g, {3, 8, 2}), random_tensor(g, {3, 3}), opt).passed);

  Var w = param(g, {4});
  auto bad_square = [&] {
    Tensor out = w.value();
    for (auto& v : out.values) v *= v;
    return sum(Var::from_op(out, {w}, [w](Node& self) mutable {
      auto& gw = w.mutable_grad();
      for (std::size_t i = 0; i < gw.size(); ++i) gw[i] -= 2.0 * w.value().values[i] * self.grad[i];
    }));
  };
  const auto report = grad_check(bad_square, {{"w", w}});
  CHECK_FALSE(report.passed);
  CHECK(report.max_rel_error == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("kink skipping: a step straddling the ReLU corner is set aside, a wrong gradient is not") {
  Var w = Var::leaf(Tensor({1}, {3e-6}), true);
  auto loss = [&] { return sum(relu(w)); };
  CHECK_FALSE(grad_check(loss, {{"w", w}}).passed);
  GradCheckOptions opt;
  opt.skip_kinks = true;
  const auto skipped = grad_check(loss, {{"w", w}}, opt);
  CHECK(skipped.passed);
  CHECK(skipped.kinks == 1);
  CHECK(skipped.checked == 1);

  testsupport::Gen g(56);
  Var v = param(g, {6});
  auto bad_square = [&] {
    Tensor out = v.value();
    for (auto& x : out.values) x *= x;
    return sum(Var::from_op(out, {v}, [v](Node& self) mutable {
      auto& gv = v.mutable_grad();
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] -= 2.0 * v.value().values[i] * self.grad[i];
    }));
  };
  const auto report = grad_check(bad_square, {{"v", v}}, opt);
  CHECK_FALSE(report.passed);
  CHECK(report.kinks == 0);
}

TEST_CASE("batch norm in train mode standardizes each feature") {
  testsupport::Gen g(55);
  auto layer = make_layer(BatchNormSpec{5});
  std::mt19937_64 rng(0);
  layer->initialize(rng);
  const Var x = Var::leaf(random_tensor(g, {64, 5}, 50.0));
  const auto y = layer->forward(x, Mode::Train, rng).value();
  for (std::size_t f = 0; f < 5; ++f) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t b = 0; b < 64; ++b) mean += y.values[b * 5 + f];
    mean /= 64.0;
    for (std::size_t b = 0; b < 64; ++b) sq += (y.values[b * 5 + f] - mean) * (y.values[b * 5 + f] - mean);
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(sq / 64.0 - 1.0) < 1e-6);
  }
}

TEST_CASE("inverted dropout preserves the expectation") {
  const Var x = Var::leaf(Tensor({1, 4}, {1.0, -2.0, 0.5, 3.0}));
  std::vector<double> mean(4, 0.0);
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 rng(premov::splitmix64(static_cast<std::uint64_t>(s)));
    const auto y = dropout(x, 0.25, rng).value().values;
    for (std::size_t i = 0; i < 4; ++i) mean[i] += y[i] / seeds;
  }
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(mean[i] - x.value().values[i]) <= 0.02 * std::abs(x.value().values[i]));
}

TEST_CASE("layer forwards are deterministic") {
  testsupport::Gen g(56);
  const Tensor in = random_tensor(g, {4, 15, 3});
  Sequential m({BatchNormSpec{3}, Conv1dSpec{3, 8, 7, Activation::Relu}, MaxPool1dSpec{5}, DropoutSpec{0.25},
                LstmSpec{8, 6, Activation::Relu}, DenseSpec{6, 3}},
               9);
  CHECK(m.predict(in) == m.predict(in));
  Sequential a = m, b = m;
  a.reseed_dropout(3);
  b.reseed_dropout(3);
  CHECK(a.forward(Var::leaf(in), Mode::Train).value() == b.forward(Var::leaf(in), Mode::Train).value());
  CHECK(Sequential(m.specs(), 9).state() == Sequential(m.specs(), 9).state());
}

TEST_CASE("adam: first step, fixed point and replica determinism") {
  std::vector<double> w{0.0}, grad{1.0};
  AdamState st;
  std::vector<std::span<double>> ps{w};
  std::vector<std::span<const double>> gs{grad};
  adam_step(ps, gs, st);
  const double m = 0.1 * 1.0, v = 0.001 * 1.0;
  const double want = -1e-3 * (m / 0.1) / (std::sqrt(v / 0.001) + 1e-8);
  CHECK(w[0] == doctest::Approx(want).epsilon(1e-15));
  CHECK(w[0] == doctest::Approx(-9.99999e-4).epsilon(1e-5));
  CHECK(st.step == 1);

  std::vector<double> still{0.7, -0.2}, zero{0.0, 0.0};
  AdamState s2;
  std::vector<std::span<double>> p2{still};
  std::vector<std::span<const double>> g2{zero};
  for (int i = 0; i < 100; ++i) adam_step(p2, g2, s2);
  CHECK(still == std::vector<double>{0.7, -0.2});

  testsupport::Gen g(57);
  std::vector<double> r1 = g.vec(10), r2 = r1;
  AdamState a1, a2;
  for (int i = 0; i < 20; ++i) {
    const auto gr = g.vec(10);
    std::vector<std::span<double>> q1{r1}, q2{r2};
    std::vector<std::span<const double>> gg{gr};
    adam_step(q1, gg, a1);
    adam_step(q2, gg, a2);
  }
  CHECK(r1 == r2);

  std::vector<double> nan_grad{std::nan("")};
  std::vector<std::span<const double>> gn{nan_grad};
  const auto before = w;
  CHECK(code_of([&] { adam_step(ps, gn, st); }) == Errc::NonFiniteGradient);
  CHECK(w == before);
}

TEST_CASE("adam follows the reference recurrence over many steps") {
  testsupport::Gen g(58);
  std::vector<double> w = g.vec(3), ref = w;
  std::vector<double> m(3, 0.0), v(3, 0.0);
  AdamState st;
  st.hyper.lr = 0.01;
  for (int t = 1; t <= 50; ++t) {
    const auto grad = g.vec(3);
    std::vector<std::span<double>> ps{w};
    std::vector<std::span<const double>> gs{grad};
    adam_step(ps, gs, st);
    for (std::size_t i = 0; i < 3; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * grad[i];
      v[i] = 0.999 * v[i] + 0.001 * grad[i] * grad[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, t)), vh = v[i] / (1.0 - std::pow(0.999, t));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("checkpoints round-trip weights and buffers at float32 precision") {
  testsupport::Gen g(59);
  Sequential m({BatchNormSpec{4}, DenseSpec{4, 5, Activation::Relu}, DenseSpec{5, 3}}, 12);
  m.forward(Var::leaf(random_tensor(g, {8, 4})), Mode::Train);
  const auto dir = testsupport::scratch_dir("ckpt");
  save_checkpoint(m, dir, "abc123", {{"note", "x"}});
  auto loaded = load_checkpoint(dir);
  CHECK(loaded.config_hash == "abc123");
  CHECK(loaded.extra["note"] == "x");
  CHECK(loaded.model.specs() == m.specs());
  const auto a = m.state(), b = loaded.model.state();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].shape == b[i].shape);
    for (std::size_t j = 0; j < a[i].numel(); ++j)
      CHECK(b[i].values[j] == static_cast<double>(static_cast<float>(a[i].values[j])));
  }
  CHECK(std::filesystem::file_size(dir / "model.f32") == 4 * (m.parameter_count() + 8));

  std::filesystem::resize_file(dir / "model.f32", 8);
  CHECK(code_of([&] { load_checkpoint(dir); }) == Errc::CorruptModel);
}
