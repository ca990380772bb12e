// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "premov/dataio.hpp"
#include "premov/decoders.hpp"
#include "premov/epoching.hpp"
#include "premov/harness/evaluate.hpp"
#include "premov/harness/train.hpp"
#include "premov/sigproc.hpp"

namespace premov::harness {

enum class ModelKind { Mlr, Mlp, CnnLstm };

std::string to_string(ModelKind kind);
/// Accepts mlr, mlp / premovnet1, cnnlstm / premovnet2.
ModelKind model_kind_from_string(const std::string& name);
decoders::NetKind net_kind(ModelKind kind);

struct NormalizationStats {
  std::vector<sigproc::ChannelStats> eeg;
  sigproc::AxisRanges kinematics{};
  bool fit_on_all = false;
};

nlohmann::ordered_json to_json(const NormalizationStats& stats);
NormalizationStats normalization_from_json(const nlohmann::json& j);

struct PreparedData {
  epoching::TrialSplit split;
  NormalizationStats stats;
  std::size_t lag = 0;
  std::vector<int> dropped;
  double sample_rate_hz = 0.0;
};

/// Epochs a preprocessed bundle, splits the trials and standardizes designs and
/// targets. Statistics come from the training trials' samples (including their
/// lag windows) unless `fit_on_all`, in which case the whole recording is used.
PreparedData prepare_participant(const dataio::ParticipantBundle& bundle, std::size_t lag,
                                 std::optional<epoching::SplitSizes> sizes, std::uint64_t split_seed,
                                 bool fit_on_all);

/// Applies stored statistics to designs and targets in place.
void normalize_pairs(std::vector<epoching::TrialTensorPair>& pairs, const NormalizationStats& stats);

struct ExperimentConfig {
  std::vector<ModelKind> models{ModelKind::Mlr, ModelKind::Mlp, ModelKind::CnnLstm};
  std::vector<int> lags_ms{150, 200, 250, 300, 350};
  TrainConfig train;
  std::uint64_t base_seed = 0;
  std::size_t jobs = 1;
  bool fit_on_all = false;
  bool per_trial_average = false;
  std::optional<epoching::SplitSizes> split;
  double mlr_lambda = 0.0;
  /// When set, each cell writes its model, split and trajectories under
  /// <artifacts_dir>/<participant>/<model>_<lag>ms.
  std::optional<std::filesystem::path> artifacts_dir;
};

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

/// Seed of one (participant, model, lag) cell.
std::uint64_t cell_seed(const std::string& participant, ModelKind model, int lag_ms, std::uint64_t base_seed);
/// Seed of a participant's trial split, shared by every model and lag.
std::uint64_t split_seed(const std::string& participant, std::uint64_t base_seed);

struct CellResult {
  std::string participant;
  ModelKind model = ModelKind::Mlr;
  int lag_ms = 0;
  std::uint64_t seed = 0;
  std::array<double, 3> r{};  // NaN when the cell failed
  std::string error;          // empty on success
  int exit_code = 0;
  int epochs_run = 0;
  double mlr_lambda = 0.0;
  std::size_t parameter_count = 0;
  std::size_t test_trials = 0;
};

struct TrainedCell {
  CellResult result;
  EvalResult eval;
  std::size_t lag = 0;
  std::array<std::vector<int>, 3> split_ids;  // train, val, test
  NormalizationStats stats;
  bool per_trial_average = false;
  std::optional<decoders::MlrModel> mlr;
  std::optional<gradkit::Sequential> net;
  TrainHistory history;
  nlohmann::ordered_json train_config;
};

/// Trains and evaluates one cell. Errors propagate. Network weights are rounded
/// to float32 before evaluation so a reloaded checkpoint scores identically.
TrainedCell run_cell(const dataio::ParticipantBundle& bundle, ModelKind model, int lag_ms,
                     const ExperimentConfig& cfg);

/// Writes cell.json (split, statistics, history, r), the model and the test
/// trajectories into `dir`.
void write_cell_artifacts(const TrainedCell& cell, const std::filesystem::path& dir);

/// Re-scores a cell directory on `bundle` using the stored split and statistics.
EvalResult evaluate_saved_cell(const std::filesystem::path& dir, const dataio::ParticipantBundle& bundle);

/// The full participants × models × lags cross product. Cells run on a pool of
/// cfg.jobs workers; failures are recorded per cell.
std::vector<CellResult> run_experiment(const std::vector<dataio::ParticipantBundle>& bundles,
                                       const ExperimentConfig& cfg);

}  // namespace premov::harness
