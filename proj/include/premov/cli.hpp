// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "premov/epoching.hpp"
#include "premov/harness/train.hpp"
#include "premov/preprocess.hpp"

namespace premov::cli {

/// Everything a command can be configured with. Values come from the defaults,
/// then the --config file, then command-line flags.
struct RunConfig {
  std::vector<std::string> bundles;
  std::string model = "cnnlstm";
  int lag_ms = 250;
  std::vector<std::string> models{"mlr", "mlp", "cnnlstm"};
  std::vector<int> lags_ms{150, 200, 250, 300, 350};
  harness::TrainConfig train;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out = "runs";
  bool fit_on_all = false;
  bool per_trial_average = false;
  double mlr_lambda = 0.0;
  std::optional<epoching::SplitSizes> split;
  bool save_models = false;
  PreprocessConfig preprocess;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);
/// Starts from the defaults; throws ConfigError on unknown keys or bad types.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Entry point of the premov executable; returns the process exit code
/// (0 success, 2 configuration, 3 data, 4 diverged training).
int run_cli(int argc, const char* const* argv);

}  // namespace premov::cli
