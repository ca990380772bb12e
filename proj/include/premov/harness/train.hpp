// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "premov/decoders.hpp"
#include "premov/epoching.hpp"
#include "premov/gradkit/model.hpp"

namespace premov::harness {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 64;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 0;
  bool shuffle_each_epoch = true;

  /// Throws ConfigError on patience >= max_epochs (unless max_epochs == 1), batch_size == 0 or lr <= 0.
  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  bool operator==(const TrainHistory&) const = default;
};

nlohmann::ordered_json to_json(const TrainHistory& history);

/// Tracks the best validation loss; only strict improvements count.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  /// Records one epoch's loss, returns true when it is a new best.
  bool update(double val_loss);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  int best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int since_best_ = 0;
  double best_ = 0.0;
};

/// Eval-mode MSE over every row of `pairs`.
double dataset_mse(gradkit::Sequential& model, decoders::NetKind kind,
                   const std::vector<epoching::TrialTensorPair>& pairs);

/// Adam on MSE over shuffled mini-batches of rows pooled across trials, with
/// early stopping on validation MSE. The model ends holding its best-validation
/// weights. Throws DivergedTraining on a non-finite loss or gradient.
TrainHistory train(gradkit::Sequential& model, decoders::NetKind kind,
                   const std::vector<epoching::TrialTensorPair>& train_pairs,
                   const std::vector<epoching::TrialTensorPair>& val_pairs, const TrainConfig& cfg);

}  // namespace premov::harness
