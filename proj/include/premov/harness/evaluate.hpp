// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

#include "premov/epoching.hpp"
#include "premov/matrix.hpp"

namespace premov::harness {

using Predictor = std::function<Matrix(const epoching::DesignMatrix&)>;

struct TrialTrajectory {
  int trial_id = 0;
  Matrix measured;   // [rows × 3]
  Matrix predicted;  // [rows × 3]
};

struct EvalResult {
  std::array<double, 3> r{};
  double sample_rate_hz = 100.0;
  std::vector<TrialTrajectory> trials;
};

/// One r per axis over the test trials concatenated in order; with
/// `per_trial_average` the per-trial r values are averaged instead.
EvalResult evaluate(const Predictor& predict, const std::vector<epoching::TrialTensorPair>& test,
                    double sample_rate_hz = 100.0, bool per_trial_average = false);

/// Writes trial_<id>.csv per test trial with "t_s,x_meas,y_meas,z_meas,x_pred,y_pred,z_pred",
/// t_s measured from movement onset. Returns the files written.
std::vector<std::filesystem::path> export_trajectories(const EvalResult& result, const std::filesystem::path& dir);

}  // namespace premov::harness
