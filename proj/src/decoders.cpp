// SPDX-License-Identifier: Apache-2.0
#include "premov/decoders.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "premov/error.hpp"
#include "premov/kernels.hpp"

namespace premov::decoders {

using epoching::DesignMatrix;
using epoching::TrialTensorPair;
using gradkit::Tensor;

namespace {

constexpr double kSingularPivot = 1e-12;
constexpr double kFallbackLambda = 1e-8;
constexpr std::size_t kPredictBatch = 512;

// Sufficient statistics of the intercept-augmented least-squares problem.
struct NormalSystem {
  std::size_t width = 0;  // features + 1; index 0 is the intercept
  std::vector<double> gram;  // [width × width]
  std::vector<double> rhs;   // [width × 3]

  explicit NormalSystem(std::size_t features)
      : width(features + 1), gram(width * width, 0.0), rhs(width * 3, 0.0) {}

  void add(const DesignMatrix& design, const Matrix& targets) {
    const std::size_t f = width - 1;
    const std::size_t rows = design.rows();
    const auto& x = design.values.storage();
    std::vector<double> xtx(f * f);
    kernels::gemm(kernels::Trans::Yes, kernels::Trans::No, f, f, rows, x, x, xtx);
    std::vector<double> xty(f * 3);
    kernels::gemm(kernels::Trans::Yes, kernels::Trans::No, f, 3, rows, x, targets.storage(), xty);
    for (std::size_t i = 0; i < f; ++i)
      for (std::size_t j = 0; j < f; ++j) gram[(i + 1) * width + j + 1] += xtx[i * f + j];
    gram[0] += static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto row = design.values.row(r);
      for (std::size_t i = 0; i < f; ++i) {
        gram[i + 1] += row[i];
        gram[(i + 1) * width] += row[i];
      }
      for (std::size_t a = 0; a < 3; ++a) rhs[a] += targets(r, a);
    }
    for (std::size_t i = 0; i < f; ++i)
      for (std::size_t a = 0; a < 3; ++a) rhs[(i + 1) * 3 + a] += xty[i * 3 + a];
  }

  // Cholesky solve of (G + lambda·I')·b = rhs, I' leaving the intercept unpenalized.
  std::vector<double> solve(double lambda) const {
    const std::size_t n = width;
    std::vector<double> l = gram;
    for (std::size_t i = 1; i < n; ++i) l[i * n + i] += lambda;
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(l[i * n + i]));

    for (std::size_t j = 0; j < n; ++j) {
      double d = l[j * n + j];
      for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
      if (!(d > kSingularPivot * max_diag))
        throw Error(Errc::SingularSystem, "normal matrix is singular at lambda=" + std::to_string(lambda) +
                                              " (pivot " + std::to_string(j) + "); use lambda > 0");
      const double djj = std::sqrt(d);
      l[j * n + j] = djj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = l[i * n + j];
        for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
        l[i * n + j] = s / djj;
      }
    }
    std::vector<double> b = rhs;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = b[i * 3 + a];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k * 3 + a];
        b[i * 3 + a] = s / l[i * n + i];
      }
      for (std::size_t i = n; i-- > 0;) {
        double s = b[i * 3 + a];
        for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k * 3 + a];
        b[i * 3 + a] = s / l[i * n + i];
      }
    }
    return b;
  }
};

MlrModel model_from_solution(const std::vector<double>& b, std::size_t channels, std::size_t lags, double lambda) {
  MlrModel m;
  m.channels = channels;
  m.lags = lags;
  m.lambda = lambda;
  const std::size_t f = channels * lags;
  m.beta.assign(3 * f, 0.0);
  for (std::size_t a = 0; a < 3; ++a) {
    m.alpha[a] = b[a];
    for (std::size_t i = 0; i < f; ++i) m.beta[a * f + i] = b[(i + 1) * 3 + a];
  }
  return m;
}

void check_targets(const DesignMatrix& design, const Matrix& targets) {
  if (targets.rows() != design.rows() || targets.cols() != 3)
    throw Error(Errc::ShapeError, "targets must be [rows x 3] matching the design");
}

}  // namespace

MlrModel mlr_fit(const DesignMatrix& design, const Matrix& targets, double lambda) {
  if (lambda < 0.0) throw Error(Errc::ConfigError, "lambda must be >= 0");
  check_targets(design, targets);
  NormalSystem sys(design.width());
  sys.add(design, targets);
  return model_from_solution(sys.solve(lambda), design.channel_count, design.lag_count, lambda);
}

MlrModel mlr_fit(const std::vector<TrialTensorPair>& pairs, double lambda) {
  if (lambda < 0.0) throw Error(Errc::ConfigError, "lambda must be >= 0");
  if (pairs.empty()) throw Error(Errc::EmptyEpochSet, "mlr_fit needs at least one trial");
  const auto& first = pairs.front().design;
  NormalSystem sys(first.width());
  for (const auto& p : pairs) {
    if (p.design.width() != first.width()) throw Error(Errc::ShapeError, "trials differ in design width");
    check_targets(p.design, p.target);
    sys.add(p.design, p.target);
  }
  return model_from_solution(sys.solve(lambda), first.channel_count, first.lag_count, lambda);
}

MlrModel mlr_fit_with_fallback(const std::vector<TrialTensorPair>& pairs, double lambda) {
  try {
    return mlr_fit(pairs, lambda);
  } catch (const Error& e) {
    if (e.code() != Errc::SingularSystem || lambda >= kFallbackLambda) throw;
    return mlr_fit(pairs, kFallbackLambda);
  }
}

Matrix mlr_predict(const MlrModel& model, const DesignMatrix& design) {
  if (design.width() != model.width())
    throw Error(Errc::ShapeError, "design width " + std::to_string(design.width()) + " vs model width " +
                                      std::to_string(model.width()));
  const std::size_t f = model.width();
  // beta is stored axis-major; the product needs it feature-major.
  std::vector<double> coef(f * 3);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < f; ++i) coef[i * 3 + a] = model.beta[a * f + i];
  Matrix out(design.rows(), 3);
  kernels::gemm(kernels::Trans::No, kernels::Trans::No, design.rows(), 3, f, design.values.storage(), coef,
                out.storage());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t a = 0; a < 3; ++a) out(r, a) += model.alpha[a];
  return out;
}

nlohmann::ordered_json to_json(const MlrModel& m) {
  nlohmann::ordered_json j;
  j["model"] = "mlr";
  j["layout"] = {{"axes", {"x", "y", "z"}},
                 {"channels", m.channels},
                 {"lags", m.lags},
                 {"beta_order", "axis,channel,lag"},
                 {"lag_0", "current sample"}};
  j["lambda"] = m.lambda;
  j["alpha"] = m.alpha;
  j["beta"] = m.beta;
  return j;
}

MlrModel mlr_from_json(const nlohmann::json& j) {
  try {
    MlrModel m;
    m.channels = j.at("layout").at("channels").get<std::size_t>();
    m.lags = j.at("layout").at("lags").get<std::size_t>();
    m.lambda = j.at("lambda").get<double>();
    m.alpha = j.at("alpha").get<std::array<double, 3>>();
    m.beta = j.at("beta").get<std::vector<double>>();
    if (m.beta.size() != 3 * m.channels * m.lags) throw Error(Errc::CorruptModel, "beta has the wrong length");
    for (double v : m.beta)
      if (!std::isfinite(v)) throw Error(Errc::CorruptModel, "beta holds non-finite values");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptModel, std::string("bad mLR model: ") + e.what());
  }
}

void save_mlr(const MlrModel& model, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + file.string());
  out << to_json(model).dump(2) << "\n";
}

MlrModel load_mlr(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::MissingComponent, file.string() + " not found");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return mlr_from_json(nlohmann::json::parse(ss.str()));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::CorruptModel, e.what());
  }
}

std::string to_string(NetKind kind) { return kind == NetKind::PreMovNetI ? "mlp" : "cnnlstm"; }

std::vector<gradkit::LayerSpec> premovnet_topology(NetKind kind, std::size_t lags, std::size_t channels) {
  using namespace gradkit;
  if (lags == 0 || channels == 0) throw Error(Errc::ShapeError, "lags and channels must be positive");
  if (kind == NetKind::PreMovNetI) {
    const std::size_t width = lags * channels;
    return {BatchNormSpec{width},
            DenseSpec{width, 128, Activation::Relu},
            DenseSpec{128, 128, Activation::Relu},
            DenseSpec{128, 128, Activation::Relu},
            DenseSpec{128, 16, Activation::Relu},
            DenseSpec{16, 3, Activation::Linear}};
  }
  if (lags / 5 / 3 < 1)
    throw Error(Errc::SequenceTooShort, "CNN-LSTM needs at least 15 lag samples, got " + std::to_string(lags));
  return {BatchNormSpec{channels},
          Conv1dSpec{channels, 256, 7, Activation::Relu},
          MaxPool1dSpec{5},
          Conv1dSpec{256, 128, 5, Activation::Relu},
          MaxPool1dSpec{3},
          DropoutSpec{0.25},
          LstmSpec{128, 128, Activation::Relu},
          DenseSpec{128, 128, Activation::Relu},
          DenseSpec{128, 3, Activation::Linear}};
}

gradkit::Sequential build_premovnet(NetKind kind, std::size_t lags, std::size_t channels, std::uint64_t seed) {
  return gradkit::Sequential(premovnet_topology(kind, lags, channels), seed);
}

Tensor network_input(NetKind kind, const DesignMatrix& design, std::size_t first, std::size_t count) {
  const std::size_t lags = design.lag_count, channels = design.channel_count;
  const std::size_t width = lags * channels;
  if (first + count > design.rows()) throw Error(Errc::ShapeError, "row range outside the design");
  if (kind == NetKind::PreMovNetI) {
    const auto src = design.values.flat().subspan(first * width, count * width);
    return Tensor({count, width}, std::vector<double>(src.begin(), src.end()));
  }
  Tensor x({count, lags, channels});
  for (std::size_t r = 0; r < count; ++r) {
    const auto row = design.values.row(first + r);
    for (std::size_t s = 0; s < lags; ++s)
      for (std::size_t n = 0; n < channels; ++n)
        x.values[(r * lags + s) * channels + n] = row[n * lags + (lags - 1 - s)];
  }
  return x;
}

Matrix net_predict(gradkit::Sequential& model, NetKind kind, const DesignMatrix& design) {
  if (!model.all_finite()) throw Error(Errc::CorruptModel, "model holds non-finite weights");
  Matrix out(design.rows(), 3);
  for (std::size_t first = 0; first < design.rows(); first += kPredictBatch) {
    const std::size_t count = std::min(kPredictBatch, design.rows() - first);
    const Tensor y = model.predict(network_input(kind, design, first, count));
    if (y.shape != gradkit::Shape{count, 3})
      throw Error(Errc::ShapeError, "network output " + gradkit::shape_string(y.shape) + ", expected [" +
                                        std::to_string(count) + ", 3]");
    std::copy(y.values.begin(), y.values.end(), out.row(first).begin());
  }
  return out;
}

}  // namespace premov::decoders
