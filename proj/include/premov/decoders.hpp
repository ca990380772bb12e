// SPDX-License-Identifier: Apache-2.0
#pragma once

// The three kinematics decoders: closed-form multi-variable linear regression
// over the lagged design, the MLP (PreMovNet-I) and the CNN-LSTM (PreMovNet-II).

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "premov/epoching.hpp"
#include "premov/gradkit/model.hpp"

namespace premov::decoders {

/// H_a[t] = alpha_a + sum_n sum_l beta[a][n][l] · V_n[t - l].
struct MlrModel {
  std::array<double, 3> alpha{};
  std::vector<double> beta;  // [3 axes × channels × lags], same feature order as the design
  std::size_t channels = 0;
  std::size_t lags = 0;
  double lambda = 0.0;

  double beta_at(std::size_t axis, std::size_t channel, std::size_t lag) const {
    return beta[(axis * channels + channel) * lags + lag];
  }
  std::size_t width() const noexcept { return channels * lags; }
};

/// Ridge-regularized least squares with an unpenalized intercept, solved through
/// the normal equations. Throws SingularSystem when the system is rank deficient.
MlrModel mlr_fit(const epoching::DesignMatrix& design, const Matrix& targets, double lambda = 0.0);

/// Same estimator pooled over trials without concatenating their designs.
MlrModel mlr_fit(const std::vector<epoching::TrialTensorPair>& pairs, double lambda = 0.0);

/// mlr_fit at `lambda`, retrying at 1e-8 when the normal matrix is singular.
MlrModel mlr_fit_with_fallback(const std::vector<epoching::TrialTensorPair>& pairs, double lambda = 0.0);

Matrix mlr_predict(const MlrModel& model, const epoching::DesignMatrix& design);

nlohmann::ordered_json to_json(const MlrModel& model);
MlrModel mlr_from_json(const nlohmann::json& j);
void save_mlr(const MlrModel& model, const std::filesystem::path& file);
MlrModel load_mlr(const std::filesystem::path& file);

enum class NetKind { PreMovNetI, PreMovNetII };

std::string to_string(NetKind kind);

/// Layer list of the MLP (kind I) or CNN-LSTM (kind II) for lag L and N channels.
/// Kind II throws SequenceTooShort when the pooled sequence would be empty.
std::vector<gradkit::LayerSpec> premovnet_topology(NetKind kind, std::size_t lags, std::size_t channels);

gradkit::Sequential build_premovnet(NetKind kind, std::size_t lags, std::size_t channels, std::uint64_t seed);

/// Network input for design rows [first, first + count): kind I takes the
/// rows as-is [count, L·N]; kind II takes [count, L, N] ordered oldest sample first.
gradkit::Tensor network_input(NetKind kind, const epoching::DesignMatrix& design, std::size_t first,
                              std::size_t count);

/// Eval-mode predictions for every design row. Throws CorruptModel on non-finite weights.
Matrix net_predict(gradkit::Sequential& model, NetKind kind, const epoching::DesignMatrix& design);

}  // namespace premov::decoders
