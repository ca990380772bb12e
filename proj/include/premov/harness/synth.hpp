// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic participants with a known EEG -> kinematics coupling.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "premov/dataio.hpp"

namespace premov::harness {

/// H_a[t] = alpha_a + sum beta[a][n][l] · v_n[t - l]. An empty beta is drawn, together
/// with alpha, from the spec seed.
struct LinearCoupling {
  std::array<double, 3> alpha{};
  std::vector<double> beta;  // [3 × channels × lag]
};

/// A random one-hidden-layer ReLU network over the lag window. Each hidden unit
/// reads a rank-1 filter: channel weights times a Gaussian bump over the lags.
struct NonlinearCoupling {
  std::vector<std::size_t> hidden{8};
  std::uint64_t seed = 1;
};

using Coupling = std::variant<LinearCoupling, NonlinearCoupling>;

struct SynthSpec {
  std::size_t channels = 21;
  std::size_t lag = 25;
  std::size_t trials = 200;
  std::size_t trial_samples = 30;  // onset .. rest inclusive
  std::size_t gap_samples = 10;
  double sample_rate_hz = 100.0;
  std::size_t sources = 4;      // latent AR(1) sources mixed into the channels; 0 = independent channels
  double sensor_noise = 0.3;    // per-channel AR(1) noise added to the mixture
  double ar_coefficient = 0.95;  // AR(1) colouring of sources and sensor noise
  double noise_sigma = 0.0;     // additive Gaussian noise on every kinematics axis
  Coupling coupling = NonlinearCoupling{};
  std::uint64_t seed = 0;
  std::string participant_id = "SYN";

  /// Throws ConfigError on a negative noise level or empty dimensions.
  void validate() const;
};

/// The acceptance preset: N=21, L=25, 200 trials, nonlinear coupling.
SynthSpec nonlinear_preset(std::uint64_t seed = 0);

nlohmann::ordered_json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

struct SynthOutput {
  dataio::ParticipantBundle bundle;
  LinearCoupling planted;         // the linear coupling actually used (linear specs only)
  nlohmann::ordered_json truth;   // spec echo plus every drawn coupling weight
};

/// Deterministic in the spec: equal specs give byte-identical bundles. EEG is
/// rounded to float32 before the coupling is applied, so the planted relation
/// holds exactly on the stored data.
SynthOutput synth_generate(const SynthSpec& spec);

/// The coupling evaluated on a lag-embedded window: rows of v_n[t-l] at n·L + l.
/// Used by tests as a noiseless reference.
std::array<double, 3> coupling_response(const nlohmann::json& truth, std::span<const double> window);

}  // namespace premov::harness
