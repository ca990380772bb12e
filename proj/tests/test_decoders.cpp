// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Dense>

#include "premov/decoders.hpp"
#include "premov/error.hpp"
#include "premov/gradkit/adam.hpp"
#include "support.hpp"

using namespace premov;
using namespace premov::decoders;
using epoching::DesignMatrix;

namespace {

DesignMatrix design(Matrix values, std::size_t channels, std::size_t lags) { return {std::move(values), lags, channels}; }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no premov::Error thrown");
  return Errc::ConfigError;
}

double train_mse(const MlrModel& m, const DesignMatrix& d, const Matrix& y) {
  const auto p = mlr_predict(m, d);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (p.storage()[i] - y.storage()[i]) * (p.storage()[i] - y.storage()[i]);
  return s / static_cast<double>(y.size());
}

std::size_t mlp_params(std::size_t l, std::size_t n) {
  const std::size_t in = l * n;
  return 2 * in + (in * 128 + 128) + 2 * (128 * 128 + 128) + (128 * 16 + 16) + (16 * 3 + 3);
}

std::size_t cnnlstm_params(std::size_t n) {
  return 2 * n + (7 * n * 256 + 256) + (5 * 256 * 128 + 128) + (4 * 128 * (128 + 128) + 4 * 128) +
         (128 * 128 + 128) + (128 * 3 + 3);
}

}  // namespace

TEST_CASE("single channel, one lag: y = 2v + 1 is recovered") {
  testsupport::Gen g(61);
  Matrix x(50, 1), y(50, 3);
  for (std::size_t t = 0; t < 50; ++t) {
    x(t, 0) = g.normal();
    for (std::size_t a = 0; a < 3; ++a) y(t, a) = 2.0 * x(t, 0) + 1.0;
  }
  const auto m = mlr_fit(design(x, 1, 1), y);
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(std::abs(m.alpha[a] - 1.0) < 1e-9);
    CHECK(std::abs(m.beta_at(a, 0, 0) - 2.0) < 1e-9);
  }
}

TEST_CASE("zero targets give the null solution; duplicate columns are singular") {
  testsupport::Gen g(62);
  const auto x = g.matrix(40, 4);
  const auto m = mlr_fit(design(x, 2, 2), Matrix(40, 3, 0.0));
  for (double a : m.alpha) CHECK(a == 0.0);
  for (double b : m.beta) CHECK(b == 0.0);

  Matrix dup = x;
  for (std::size_t t = 0; t < 40; ++t) dup(t, 3) = dup(t, 1);
  const auto y = g.matrix(40, 3);
  CHECK(code_of([&] { mlr_fit(design(dup, 2, 2), y); }) == Errc::SingularSystem);
  const auto ridge = mlr_fit(design(dup, 2, 2), y, 1e-8);
  for (double b : ridge.beta) CHECK(std::isfinite(b));

  std::vector<epoching::TrialTensorPair> pairs(1);
  pairs[0].design = design(dup, 2, 2);
  pairs[0].target = y;
  const auto fallback = mlr_fit_with_fallback(pairs);
  CHECK(fallback.lambda == 1e-8);
}

TEST_CASE("fit agrees with an Eigen least-squares oracle and with the pooled fit") {
  testsupport::Gen g(63);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = g.index(1, 4), l = g.index(1, 5), rows = g.index(n * l + 10, 300);
    const auto x = g.matrix(rows, n * l);
    const auto y = g.matrix(rows, 3);
    const double lambda = trial % 2 ? 0.0 : g.uniform(0.0, 2.0);
    const auto m = mlr_fit(design(x, n, l), y, lambda);

    Eigen::MatrixXd xa(rows, n * l + 1), ya(rows, 3);
    for (std::size_t t = 0; t < rows; ++t) {
      xa(t, 0) = 1.0;
      for (std::size_t j = 0; j < n * l; ++j) xa(t, j + 1) = x(t, j);
      for (std::size_t a = 0; a < 3; ++a) ya(t, a) = y(t, a);
    }
    Eigen::MatrixXd gram = xa.transpose() * xa;
    gram.diagonal().tail(n * l).array() += lambda;
    const Eigen::MatrixXd coef = gram.ldlt().solve(xa.transpose() * ya);
    for (std::size_t a = 0; a < 3; ++a) {
      CHECK(std::abs(m.alpha[a] - coef(0, a)) < 1e-9);
      for (std::size_t j = 0; j < n * l; ++j) CHECK(std::abs(m.beta[a * n * l + j] - coef(j + 1, a)) < 1e-9);
    }

    std::vector<epoching::TrialTensorPair> pairs;
    for (std::size_t start = 0; start < rows; start += 37) {
      const std::size_t count = std::min<std::size_t>(37, rows - start);
      epoching::TrialTensorPair p;
      p.design = design(Matrix(count, n * l, std::vector<double>(x.storage().begin() + start * n * l,
                                                                  x.storage().begin() + (start + count) * n * l)),
                        n, l);
      p.target = Matrix(count, 3, std::vector<double>(y.storage().begin() + start * 3,
                                                      y.storage().begin() + (start + count) * 3));
      pairs.push_back(std::move(p));
    }
    const auto pooled = mlr_fit(pairs, lambda);
    for (std::size_t i = 0; i < m.beta.size(); ++i) CHECK(std::abs(pooled.beta[i] - m.beta[i]) < 1e-9);
  }
}

TEST_CASE("prediction: reproduces planted targets, intercept only, linearity") {
  testsupport::Gen g(64);
  const std::size_t n = 3, l = 4, rows = 200;
  const auto x = g.matrix(rows, n * l);
  MlrModel planted;
  planted.channels = n;
  planted.lags = l;
  planted.alpha = {0.5, -1.0, 2.0};
  planted.beta = g.vec(3 * n * l);
  const auto y = mlr_predict(planted, design(x, n, l));
  const auto m = mlr_fit(design(x, n, l), y);
  const auto p = mlr_predict(m, design(x, n, l));
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(p.storage()[i] - y.storage()[i]) < 1e-8);

  MlrModel intercept = planted;
  intercept.alpha = {1, 2, 3};
  const auto c = mlr_predict(intercept, design(Matrix(5, n * l, 0.0), n, l));
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t a = 0; a < 3; ++a) CHECK(c(t, a) == static_cast<double>(a + 1));

  const auto x2 = g.matrix(rows, n * l);
  Matrix sum_x(rows, n * l);
  for (std::size_t i = 0; i < sum_x.size(); ++i) sum_x.storage()[i] = x.storage()[i] + x2.storage()[i];
  const auto ps = mlr_predict(planted, design(sum_x, n, l));
  const auto p1 = mlr_predict(planted, design(x, n, l)), p2 = mlr_predict(planted, design(x2, n, l));
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t a = 0; a < 3; ++a) CHECK(std::abs(ps(t, a) - (p1(t, a) + p2(t, a) - planted.alpha[a])) < 1e-12);

  CHECK(code_of([&] { mlr_predict(planted, design(g.matrix(4, 5), 1, 5)); }) == Errc::ShapeError);
}

TEST_CASE("property: the fit beats 100 random perturbations") {
  testsupport::Gen g(65);
  const auto x = g.matrix(150, 6);
  const auto y = g.matrix(150, 3);
  const auto d = design(x, 2, 3);
  const auto best = mlr_fit(d, y);
  const double base = train_mse(best, d, y);
  for (int i = 0; i < 100; ++i) {
    auto other = best;
    const double scale = std::pow(10.0, g.uniform(-6.0, 0.0));
    for (auto& b : other.beta) b += scale * g.normal();
    for (auto& a : other.alpha) a += scale * g.normal();
    CHECK(train_mse(other, d, y) >= base);
  }
}

TEST_CASE("property: affine maps of the targets carry through the predictions") {
  testsupport::Gen g(66);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = g.matrix(120, 8);
    const auto y = g.matrix(120, 3);
    const double a = g.uniform(0.1, 10.0) * (g.index(0, 1) ? 1.0 : -1.0), b = g.uniform(-5.0, 5.0);
    Matrix ay = y;
    for (auto& v : ay.storage()) v = a * v + b;
    const auto d = design(x, 4, 2);
    const auto p = mlr_predict(mlr_fit(d, y), d), pa = mlr_predict(mlr_fit(d, ay), d);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(pa.storage()[i] - (a * p.storage()[i] + b)) < 1e-9);
  }
}

TEST_CASE("mlr JSON round trip and rejection of broken input") {
  testsupport::Gen g(67);
  const auto m = mlr_fit(design(g.matrix(60, 6), 3, 2), g.matrix(60, 3), 0.25);
  const auto dir = testsupport::scratch_dir("mlr");
  save_mlr(m, dir / "mlr.json");
  const auto back = load_mlr(dir / "mlr.json");
  CHECK(back.alpha == m.alpha);
  CHECK(back.beta == m.beta);
  CHECK(back.channels == 3);
  CHECK(back.lags == 2);
  CHECK(back.lambda == 0.25);
  auto j = nlohmann::json::parse(to_json(m).dump());
  j["beta"].erase(0);
  CHECK(code_of([&] { mlr_from_json(j); }) == Errc::CorruptModel);
}

TEST_CASE("topologies and parameter counts") {
  for (std::size_t l : {15, 20, 25, 30, 35}) {
    CHECK(build_premovnet(NetKind::PreMovNetI, l, 21, 0).parameter_count() == mlp_params(l, 21));
    CHECK(build_premovnet(NetKind::PreMovNetII, l, 21, 0).parameter_count() == cnnlstm_params(21));
  }
  const auto mlp = premovnet_topology(NetKind::PreMovNetI, 15, 21);
  REQUIRE(mlp.size() == 6);
  CHECK(std::get<gradkit::BatchNormSpec>(mlp[0]).features == 315);
  CHECK(std::get<gradkit::DenseSpec>(mlp[1]) == gradkit::DenseSpec{315, 128, gradkit::Activation::Relu});
  CHECK(std::get<gradkit::DenseSpec>(mlp[5]) == gradkit::DenseSpec{16, 3, gradkit::Activation::Linear});

  const auto cnn = premovnet_topology(NetKind::PreMovNetII, 25, 21);
  REQUIRE(cnn.size() == 9);
  CHECK(std::get<gradkit::Conv1dSpec>(cnn[1]) == gradkit::Conv1dSpec{21, 256, 7, gradkit::Activation::Relu});
  CHECK(std::get<gradkit::MaxPool1dSpec>(cnn[2]).window == 5);
  CHECK(std::get<gradkit::MaxPool1dSpec>(cnn[4]).window == 3);
  CHECK(std::get<gradkit::DropoutSpec>(cnn[5]).rate == 0.25);
  CHECK(std::get<gradkit::LstmSpec>(cnn[6]) == gradkit::LstmSpec{128, 128, gradkit::Activation::Relu});

  auto net = build_premovnet(NetKind::PreMovNetII, 25, 21, 0);
  testsupport::Gen g(68);
  gradkit::Tensor x({2, 25, 21});
  for (auto& v : x.values) v = g.normal();
  CHECK(net.predict(x).shape == gradkit::Shape{2, 3});
  CHECK_NOTHROW(premovnet_topology(NetKind::PreMovNetII, 15, 21));
  CHECK(code_of([&] { premovnet_topology(NetKind::PreMovNetII, 14, 21); }) == Errc::SequenceTooShort);
  CHECK(build_premovnet(NetKind::PreMovNetI, 20, 4, 7).state() == build_premovnet(NetKind::PreMovNetI, 20, 4, 7).state());
}

TEST_CASE("network input orders the sequence oldest sample first") {
  testsupport::Gen g(69);
  const std::size_t n = 3, l = 4;
  const auto d = design(g.matrix(5, n * l), n, l);
  const auto seq = network_input(NetKind::PreMovNetII, d, 1, 3);
  CHECK(seq.shape == gradkit::Shape{3, l, n});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t s = 0; s < l; ++s)
      for (std::size_t c = 0; c < n; ++c) CHECK(seq.values[(r * l + s) * n + c] == d.at(r + 1, c, l - 1 - s));
  const auto flat = network_input(NetKind::PreMovNetI, d, 0, 5);
  CHECK(flat.values == d.values.storage());
}

TEST_CASE("net_predict: determinism, shape, degenerate weights, corrupt weights") {
  testsupport::Gen g(70);
  auto net = build_premovnet(NetKind::PreMovNetI, 15, 4, 1);
  Matrix rows(4000, 60);
  for (auto& v : rows.storage()) v = g.normal();
  for (std::size_t j = 0; j < 60; ++j) rows(1, j) = rows(0, j);
  const auto d = design(rows, 4, 15);
  const auto p = net_predict(net, NetKind::PreMovNetI, d);
  CHECK(p.rows() == 4000);
  CHECK(p.cols() == 3);
  for (std::size_t a = 0; a < 3; ++a) CHECK(p(0, a) == p(1, a));

  auto zeroed = net;
  const auto params = zeroed.parameters();
  for (std::size_t i = 0; i + 2 < params.size(); ++i)
    if (params[i].name.find("weight") != std::string::npos)
      for (auto& v : gradkit::Var(params[i].var).mutable_value().values) v = 0.0;
  const auto out_bias = params.back().var.value().values;
  const auto c = net_predict(zeroed, NetKind::PreMovNetI, design(Matrix(rows.rows() / 100, 60, 1.5), 4, 15));
  for (std::size_t t = 0; t < c.rows(); ++t)
    for (std::size_t a = 0; a < 3; ++a) CHECK(c(t, a) == doctest::Approx(out_bias[a]).epsilon(1e-12));

  auto broken = net;
  gradkit::Var(broken.parameters()[2].var).mutable_value().values[0] = std::nan("");
  CHECK(code_of([&] { net_predict(broken, NetKind::PreMovNetI, d); }) == Errc::CorruptModel);
}

TEST_CASE("one small Adam step lowers a single pair's loss for both kinds") {
  testsupport::Gen g(71);
  for (auto kind : {NetKind::PreMovNetI, NetKind::PreMovNetII}) {
    auto net = build_premovnet(kind, 15, 4, 5);
    const auto d = design(g.matrix(1, 60), 4, 15);
    gradkit::Tensor target({1, 3}, {0.3, 0.6, 0.9});
    const auto input = network_input(kind, d, 0, 1);
    auto loss_of = [&] { return gradkit::mse(net.forward(gradkit::Var::leaf(input), gradkit::Mode::Eval), target).value().values[0]; };
    const double before = loss_of();
    net.zero_grad();
    gradkit::backward(gradkit::mse(net.forward(gradkit::Var::leaf(input), gradkit::Mode::Eval), target));
    gradkit::AdamState st;
    st.hyper.lr = 1e-4;
    gradkit::adam_step(net.parameters(), st);
    CHECK(loss_of() < before);
  }
}
