// SPDX-License-Identifier: Apache-2.0
#include "premov/harness/train.hpp"

#include <cmath>
#include <string>

#include "premov/error.hpp"
#include "premov/gradkit/adam.hpp"
#include "premov/gradkit/ops.hpp"
#include "premov/random.hpp"

namespace premov::harness {

using decoders::NetKind;
using epoching::TrialTensorPair;
using gradkit::Tensor;

namespace {

struct RowRef {
  std::uint32_t pair;
  std::uint32_t row;
};

std::vector<RowRef> pool_rows(const std::vector<TrialTensorPair>& pairs) {
  std::vector<RowRef> refs;
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (std::size_t r = 0; r < pairs[p].design.rows(); ++r)
      refs.push_back({static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(r)});
  return refs;
}

void gather(NetKind kind, const std::vector<TrialTensorPair>& pairs, std::span<const RowRef> refs, Tensor& x,
            Tensor& y) {
  const auto& d0 = pairs.front().design;
  const std::size_t lags = d0.lag_count, channels = d0.channel_count, width = lags * channels;
  const std::size_t b = refs.size();
  x = kind == NetKind::PreMovNetI ? Tensor({b, width}) : Tensor({b, lags, channels});
  y = Tensor({b, 3});
  for (std::size_t i = 0; i < b; ++i) {
    const auto& pair = pairs[refs[i].pair];
    const auto row = pair.design.values.row(refs[i].row);
    double* dst = x.values.data() + i * width;
    if (kind == NetKind::PreMovNetI) {
      std::copy(row.begin(), row.end(), dst);
    } else {
      for (std::size_t s = 0; s < lags; ++s)
        for (std::size_t n = 0; n < channels; ++n) dst[s * channels + n] = row[n * lags + (lags - 1 - s)];
    }
    for (std::size_t a = 0; a < 3; ++a) y.values[i * 3 + a] = pair.target(refs[i].row, a);
  }
}

void check_pairs(const std::vector<TrialTensorPair>& pairs, const char* what) {
  if (pairs.empty()) throw Error(Errc::EmptyEpochSet, std::string(what) + " set is empty");
  const auto& d0 = pairs.front().design;
  for (const auto& p : pairs)
    if (p.design.lag_count != d0.lag_count || p.design.channel_count != d0.channel_count)
      throw Error(Errc::ShapeError, std::string(what) + " trials differ in design layout");
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error(Errc::ConfigError, "batch_size must be >= 1");
  if (max_epochs < 1) throw Error(Errc::ConfigError, "max_epochs must be >= 1");
  // A single-epoch run never consults the stopper, so any patience is accepted there.
  if (patience < 1 || (max_epochs > 1 && patience >= max_epochs))
    throw Error(Errc::ConfigError, "patience must lie in [1, max_epochs)");
  if (!(lr > 0.0)) throw Error(Errc::ConfigError, "lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw Error(Errc::ConfigError, "Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw Error(Errc::ConfigError, "epsilon must be > 0");
}

nlohmann::ordered_json to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["lr"] = cfg.lr;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["epsilon"] = cfg.epsilon;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["seed"] = cfg.seed;
  j["shuffle_each_epoch"] = cfg.shuffle_each_epoch;
  return j;
}

nlohmann::ordered_json to_json(const TrainHistory& h) {
  nlohmann::ordered_json j;
  j["best_epoch"] = h.best_epoch;
  j["best_val_loss"] = h.best_val_loss;
  j["stopped_early"] = h.stopped_early;
  auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) epochs.push_back({{"epoch", e.epoch}, {"train", e.train_loss}, {"val", e.val_loss}});
  return j;
}

bool EarlyStopper::update(double val_loss) {
  ++epoch_;
  if (best_epoch_ == 0 || val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

double dataset_mse(gradkit::Sequential& model, NetKind kind, const std::vector<TrialTensorPair>& pairs) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& p : pairs) {
    const Matrix pred = decoders::net_predict(model, kind, p.design);
    for (std::size_t i = 0; i < pred.storage().size(); ++i) {
      const double d = pred.storage()[i] - p.target.storage()[i];
      total += d * d;
    }
    count += pred.storage().size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

TrainHistory train(gradkit::Sequential& model, NetKind kind, const std::vector<TrialTensorPair>& train_pairs,
                   const std::vector<TrialTensorPair>& val_pairs, const TrainConfig& cfg) {
  cfg.validate();
  check_pairs(train_pairs, "training");
  check_pairs(val_pairs, "validation");

  std::vector<RowRef> rows = pool_rows(train_pairs);
  gradkit::AdamState adam;
  adam.hyper = {cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon};
  model.reseed_dropout(splitmix64(cfg.seed ^ 0xd5091e5ULL));

  TrainHistory history;
  EarlyStopper stopper(cfg.patience);
  std::vector<Tensor> best_state = model.state();
  const auto params = model.parameters();
  Tensor xb, yb;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<RowRef> order = rows;
    if (cfg.shuffle_each_epoch || epoch == 1) {
      const auto perm = seeded_permutation(rows.size(), splitmix64(cfg.seed + static_cast<std::uint64_t>(epoch)));
      for (std::size_t i = 0; i < perm.size(); ++i) order[i] = rows[perm[i]];
    }

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      gather(kind, train_pairs, std::span(order).subspan(start, count), xb, yb);
      model.zero_grad();
      const auto loss = gradkit::mse(model.forward(gradkit::Var::leaf(xb), gradkit::Mode::Train), yb);
      const double value = loss.value().values[0];
      if (!std::isfinite(value))
        throw Error(Errc::DivergedTraining, "non-finite training loss in epoch " + std::to_string(epoch));
      gradkit::backward(loss);
      try {
        gradkit::adam_step(params, adam);
      } catch (const Error& e) {
        if (e.code() != Errc::NonFiniteGradient) throw;
        throw Error(Errc::DivergedTraining, "non-finite gradient in epoch " + std::to_string(epoch));
      }
      loss_sum += value * static_cast<double>(count);
    }

    const double val_loss = dataset_mse(model, kind, val_pairs);
    if (!std::isfinite(val_loss))
      throw Error(Errc::DivergedTraining, "non-finite validation loss in epoch " + std::to_string(epoch));
    history.epochs.push_back({epoch, loss_sum / static_cast<double>(order.size()), val_loss});
    if (stopper.update(val_loss)) best_state = model.state();
    if (stopper.should_stop()) {
      history.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }

  model.load_state(best_state);
  model.zero_grad();
  history.best_epoch = stopper.best_epoch();
  history.best_val_loss = stopper.best_loss();
  return history;
}

}  // namespace premov::harness
