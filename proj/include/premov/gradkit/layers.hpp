// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "premov/gradkit/ops.hpp"

namespace premov::gradkit {

enum class Mode { Train, Eval };
enum class Activation { Linear, Relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::Linear;
  bool operator==(const DenseSpec&) const = default;
};

/// 'same' zero padding; cross-correlation.
struct Conv1dSpec {
  std::size_t in_channels = 0;
  std::size_t filters = 0;
  std::size_t kernel = 0;
  Activation activation = Activation::Linear;
  bool operator==(const Conv1dSpec&) const = default;
};

/// Stride equals window.
struct MaxPool1dSpec {
  std::size_t window = 0;
  bool operator==(const MaxPool1dSpec&) const = default;
};

struct BatchNormSpec {
  std::size_t features = 0;
  double momentum = 0.1;
  double epsilon = 1e-5;
  bool operator==(const BatchNormSpec&) const = default;
};

struct DropoutSpec {
  double rate = 0.0;
  bool operator==(const DropoutSpec&) const = default;
};

/// Emits only the final hidden state.
struct LstmSpec {
  std::size_t input_size = 0;
  std::size_t cells = 0;
  Activation activation = Activation::Linear;  // applied to the final state
  bool operator==(const LstmSpec&) const = default;
};

using LayerSpec = std::variant<DenseSpec, Conv1dSpec, MaxPool1dSpec, BatchNormSpec, DropoutSpec, LstmSpec>;

/// Throws ShapeError on non-positive sizes or an out-of-range dropout rate.
void validate(const LayerSpec& spec);
std::string layer_name(const LayerSpec& spec);
nlohmann::ordered_json to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

struct NamedVar {
  std::string name;
  Var var;
};

class Layer {
 public:
  virtual ~Layer() = default;

  /// `rng` drives dropout masks; other layers ignore it.
  virtual Var forward(const Var& input, Mode mode, std::mt19937_64& rng) = 0;
  virtual LayerSpec spec() const = 0;
  /// Re-draws trainable weights.
  virtual void initialize(std::mt19937_64& rng) = 0;
  virtual std::vector<NamedVar> parameters() { return {}; }
  /// Non-trainable state saved with the weights (batch-norm running statistics).
  virtual std::vector<NamedVar> buffers() { return {}; }
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

}  // namespace premov::gradkit
