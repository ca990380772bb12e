// SPDX-License-Identifier: Apache-2.0
#pragma once

// The full raw-bundle chain: band-pass, average reference, decimation, delta
// band, channel selection; kinematics low-pass and decimation.

#include <json.hpp>

#include "premov/dataio.hpp"
#include "premov/epoching.hpp"

namespace premov {

struct BandSpec {
  double low_hz = 0.0;
  double high_hz = 0.0;
  double transition_hz = 0.0;
};

struct PreprocessConfig {
  BandSpec bandpass{0.1, 40.0, 0.5};
  BandSpec delta{0.5, 3.0, 0.25};
  double kinematics_cutoff_hz = 2.0;
  double kinematics_transition_hz = 0.5;
  double target_rate_hz = 100.0;
  epoching::ChannelLayout layout = epoching::ChannelLayout::motor21();
};

nlohmann::ordered_json to_json(const PreprocessConfig& cfg);

/// Runs the chain in order and logs every step. Stage failures are rethrown
/// with the stage name; a bundle that already carries any of these steps is
/// rejected with StageAlreadyApplied.
dataio::ParticipantBundle preprocess_bundle(const dataio::ParticipantBundle& raw, const PreprocessConfig& cfg);

}  // namespace premov
