// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <vector>

#include <json.hpp>

#include "premov/gradkit/layers.hpp"

namespace premov::gradkit {

/// A stack of layers applied in order. Weights are drawn from `seed` at
/// construction, so equal (specs, seed) pairs produce identical models.
class Sequential {
 public:
  Sequential(std::vector<LayerSpec> specs, std::uint64_t seed);
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  Var forward(const Var& input, Mode mode);
  /// Eval-mode forward without recording a graph.
  Tensor predict(const Tensor& input);

  /// Trainable tensors, named "<layer index>.<name>", in declaration order.
  std::vector<NamedVar> parameters() const;
  std::vector<NamedVar> buffers() const;
  std::size_t parameter_count() const;
  void zero_grad();

  /// Every parameter and buffer, layer by layer (parameters before buffers).
  std::vector<Tensor> state() const;
  std::vector<NamedVar> state_vars() const;
  void load_state(const std::vector<Tensor>& state);

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::uint64_t seed() const noexcept { return seed_; }
  void reseed_dropout(std::uint64_t seed) { dropout_rng_.seed(seed); }

  bool all_finite() const;

 private:
  std::vector<LayerSpec> specs_;
  std::uint64_t seed_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::mt19937_64 dropout_rng_;
};

/// Writes model.json (layer specs, seed, config hash, tensor table, `extra`) and
/// model.f32 (little-endian float32 tensors in declaration order).
void save_checkpoint(const Sequential& model, const std::filesystem::path& dir, const std::string& config_hash,
                     const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

struct LoadedCheckpoint {
  Sequential model;
  std::string config_hash;
  nlohmann::json extra;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace premov::gradkit
