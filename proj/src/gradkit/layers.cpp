// SPDX-License-Identifier: Apache-2.0
#include "premov/gradkit/layers.hpp"

#include <cmath>

#include "premov/error.hpp"
#include "premov/random.hpp"

namespace premov::gradkit {

namespace {

void fill_uniform(Var& v, double limit, std::mt19937_64& rng) {
  for (double& x : v.mutable_value().values) x = (2.0 * uniform01(rng) - 1.0) * limit;
}

Var apply(Activation a, const Var& x) { return a == Activation::Relu ? relu(x) : x; }

void check_input(const Var& x, std::size_t rank, std::size_t last, const std::string& layer) {
  if (x.shape().size() != rank || x.shape().back() != last)
    throw Error(Errc::ShapeError, layer + " expects rank-" + std::to_string(rank) + " input with last dim " +
                                      std::to_string(last) + ", got " + shape_string(x.shape()));
}

class DenseLayer final : public Layer {
 public:
  explicit DenseLayer(DenseSpec s)
      : spec_(s), w_(Var::leaf(Tensor({s.in, s.out}), true)), b_(Var::leaf(Tensor({s.out}), true)) {}

  Var forward(const Var& x, Mode, std::mt19937_64&) override {
    check_input(x, 2, spec_.in, "Dense");
    return apply(spec_.activation, dense(x, w_, b_));
  }
  LayerSpec spec() const override { return spec_; }
  void initialize(std::mt19937_64& rng) override {
    fill_uniform(w_, std::sqrt(6.0 / static_cast<double>(spec_.in)), rng);
    std::fill(b_.mutable_value().values.begin(), b_.mutable_value().values.end(), 0.0);
  }
  std::vector<NamedVar> parameters() override { return {{"weight", w_}, {"bias", b_}}; }

 private:
  DenseSpec spec_;
  Var w_, b_;
};

class Conv1dLayer final : public Layer {
 public:
  explicit Conv1dLayer(Conv1dSpec s)
      : spec_(s),
        w_(Var::leaf(Tensor({s.kernel, s.in_channels, s.filters}), true)),
        b_(Var::leaf(Tensor({s.filters}), true)) {}

  Var forward(const Var& x, Mode, std::mt19937_64&) override {
    check_input(x, 3, spec_.in_channels, "Conv1d");
    return apply(spec_.activation, conv1d_same(x, w_, b_));
  }
  LayerSpec spec() const override { return spec_; }
  void initialize(std::mt19937_64& rng) override {
    fill_uniform(w_, std::sqrt(6.0 / static_cast<double>(spec_.kernel * spec_.in_channels)), rng);
    std::fill(b_.mutable_value().values.begin(), b_.mutable_value().values.end(), 0.0);
  }
  std::vector<NamedVar> parameters() override { return {{"weight", w_}, {"bias", b_}}; }

 private:
  Conv1dSpec spec_;
  Var w_, b_;
};

class MaxPool1dLayer final : public Layer {
 public:
  explicit MaxPool1dLayer(MaxPool1dSpec s) : spec_(s) {}
  Var forward(const Var& x, Mode, std::mt19937_64&) override { return maxpool1d(x, spec_.window); }
  LayerSpec spec() const override { return spec_; }
  void initialize(std::mt19937_64&) override {}

 private:
  MaxPool1dSpec spec_;
};

class BatchNormLayer final : public Layer {
 public:
  explicit BatchNormLayer(BatchNormSpec s)
      : spec_(s),
        gamma_(Var::leaf(Tensor({s.features}, 1.0), true)),
        beta_(Var::leaf(Tensor({s.features}), true)),
        running_mean_(Var::leaf(Tensor({s.features}, 0.0))),
        running_var_(Var::leaf(Tensor({s.features}, 1.0))) {}

  Var forward(const Var& x, Mode mode, std::mt19937_64&) override {
    if (x.shape().empty() || x.shape().back() != spec_.features)
      throw Error(Errc::ShapeError, "BatchNorm over " + std::to_string(spec_.features) + " features got " +
                                        shape_string(x.shape()));
    if (mode == Mode::Eval)
      return batchnorm_eval(x, gamma_, beta_, running_mean_.value().values, running_var_.value().values,
                            spec_.epsilon);
    BatchStats stats;
    Var y = batchnorm_train(x, gamma_, beta_, spec_.epsilon, &stats);
    const double rows = static_cast<double>(x.numel() / spec_.features);
    const double unbias = rows > 1.0 ? rows / (rows - 1.0) : 1.0;
    auto& rm = running_mean_.mutable_value().values;
    auto& rv = running_var_.mutable_value().values;
    for (std::size_t f = 0; f < spec_.features; ++f) {
      rm[f] = (1.0 - spec_.momentum) * rm[f] + spec_.momentum * stats.mean[f];
      rv[f] = (1.0 - spec_.momentum) * rv[f] + spec_.momentum * stats.var[f] * unbias;
    }
    return y;
  }
  LayerSpec spec() const override { return spec_; }
  void initialize(std::mt19937_64&) override {
    std::fill(gamma_.mutable_value().values.begin(), gamma_.mutable_value().values.end(), 1.0);
    std::fill(beta_.mutable_value().values.begin(), beta_.mutable_value().values.end(), 0.0);
    std::fill(running_mean_.mutable_value().values.begin(), running_mean_.mutable_value().values.end(), 0.0);
    std::fill(running_var_.mutable_value().values.begin(), running_var_.mutable_value().values.end(), 1.0);
  }
  std::vector<NamedVar> parameters() override { return {{"gamma", gamma_}, {"beta", beta_}}; }
  std::vector<NamedVar> buffers() override {
    return {{"running_mean", running_mean_}, {"running_var", running_var_}};
  }

 private:
  BatchNormSpec spec_;
  Var gamma_, beta_, running_mean_, running_var_;
};

class DropoutLayer final : public Layer {
 public:
  explicit DropoutLayer(DropoutSpec s) : spec_(s) {}
  Var forward(const Var& x, Mode mode, std::mt19937_64& rng) override {
    if (mode == Mode::Eval || spec_.rate == 0.0) return x;
    return dropout(x, spec_.rate, rng);
  }
  LayerSpec spec() const override { return spec_; }
  void initialize(std::mt19937_64&) override {}

 private:
  DropoutSpec spec_;
};

class LstmLayer final : public Layer {
 public:
  explicit LstmLayer(LstmSpec s)
      : spec_(s),
        w_x_(Var::leaf(Tensor({s.input_size, 4 * s.cells}), true)),
        w_h_(Var::leaf(Tensor({s.cells, 4 * s.cells}), true)),
        b_(Var::leaf(Tensor({4 * s.cells}), true)) {}

  Var forward(const Var& x, Mode, std::mt19937_64&) override {
    check_input(x, 3, spec_.input_size, "Lstm");
    return apply(spec_.activation, lstm_last(x, w_x_, w_h_, b_));
  }
  LayerSpec spec() const override { return spec_; }
  void initialize(std::mt19937_64& rng) override {
    fill_uniform(w_x_, 1.0 / std::sqrt(static_cast<double>(spec_.input_size)), rng);
    fill_uniform(w_h_, 1.0 / std::sqrt(static_cast<double>(spec_.cells)), rng);
    auto& b = b_.mutable_value().values;
    std::fill(b.begin(), b.end(), 0.0);
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(spec_.cells),
              b.begin() + static_cast<std::ptrdiff_t>(2 * spec_.cells), 1.0);
  }
  std::vector<NamedVar> parameters() override {
    return {{"weight_input", w_x_}, {"weight_hidden", w_h_}, {"bias", b_}};
  }

 private:
  LstmSpec spec_;
  Var w_x_, w_h_, b_;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "linear"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "linear") return Activation::Linear;
  throw Error(Errc::CorruptModel, "unknown activation '" + s + "'");
}

void validate(const LayerSpec& spec) {
  auto positive = [](std::initializer_list<std::size_t> dims, const char* what) {
    for (auto d : dims)
      if (d == 0) throw Error(Errc::ShapeError, std::string(what) + " dimensions must be positive");
  };
  std::visit(overloaded{
                 [&](const DenseSpec& s) { positive({s.in, s.out}, "Dense"); },
                 [&](const Conv1dSpec& s) { positive({s.in_channels, s.filters, s.kernel}, "Conv1d"); },
                 [&](const MaxPool1dSpec& s) { positive({s.window}, "MaxPool1d"); },
                 [&](const BatchNormSpec& s) {
                   positive({s.features}, "BatchNorm");
                   if (!(s.epsilon > 0.0) || !(s.momentum >= 0.0 && s.momentum <= 1.0))
                     throw Error(Errc::ShapeError, "BatchNorm needs epsilon > 0 and momentum in [0, 1]");
                 },
                 [&](const DropoutSpec& s) {
                   if (!(s.rate >= 0.0 && s.rate < 1.0))
                     throw Error(Errc::ShapeError, "dropout rate must lie in [0, 1)");
                 },
                 [&](const LstmSpec& s) { positive({s.input_size, s.cells}, "Lstm"); },
             },
             spec);
}

std::string layer_name(const LayerSpec& spec) {
  return std::visit(overloaded{
                        [](const DenseSpec&) { return std::string("Dense"); },
                        [](const Conv1dSpec&) { return std::string("Conv1d"); },
                        [](const MaxPool1dSpec&) { return std::string("MaxPool1d"); },
                        [](const BatchNormSpec&) { return std::string("BatchNorm"); },
                        [](const DropoutSpec&) { return std::string("Dropout"); },
                        [](const LstmSpec&) { return std::string("Lstm"); },
                    },
                    spec);
}

nlohmann::ordered_json to_json(const LayerSpec& spec) {
  nlohmann::ordered_json j;
  j["type"] = layer_name(spec);
  std::visit(overloaded{
                 [&](const DenseSpec& s) {
                   j["in"] = s.in;
                   j["out"] = s.out;
                   j["activation"] = to_string(s.activation);
                 },
                 [&](const Conv1dSpec& s) {
                   j["in_channels"] = s.in_channels;
                   j["filters"] = s.filters;
                   j["kernel"] = s.kernel;
                   j["padding"] = "same";
                   j["activation"] = to_string(s.activation);
                 },
                 [&](const MaxPool1dSpec& s) {
                   j["window"] = s.window;
                   j["stride"] = s.window;
                 },
                 [&](const BatchNormSpec& s) {
                   j["features"] = s.features;
                   j["momentum"] = s.momentum;
                   j["epsilon"] = s.epsilon;
                 },
                 [&](const DropoutSpec& s) { j["rate"] = s.rate; },
                 [&](const LstmSpec& s) {
                   j["input_size"] = s.input_size;
                   j["cells"] = s.cells;
                   j["activation"] = to_string(s.activation);
                 },
             },
             spec);
  return j;
}

LayerSpec layer_spec_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    LayerSpec spec;
    if (type == "Dense")
      spec = DenseSpec{j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
                       activation_from_string(j.at("activation").get<std::string>())};
    else if (type == "Conv1d")
      spec = Conv1dSpec{j.at("in_channels").get<std::size_t>(), j.at("filters").get<std::size_t>(),
                        j.at("kernel").get<std::size_t>(),
                        activation_from_string(j.at("activation").get<std::string>())};
    else if (type == "MaxPool1d")
      spec = MaxPool1dSpec{j.at("window").get<std::size_t>()};
    else if (type == "BatchNorm")
      spec = BatchNormSpec{j.at("features").get<std::size_t>(), j.at("momentum").get<double>(),
                           j.at("epsilon").get<double>()};
    else if (type == "Dropout")
      spec = DropoutSpec{j.at("rate").get<double>()};
    else if (type == "Lstm")
      spec = LstmSpec{j.at("input_size").get<std::size_t>(), j.at("cells").get<std::size_t>(),
                      activation_from_string(j.at("activation").get<std::string>())};
    else
      throw Error(Errc::CorruptModel, "unknown layer type '" + type + "'");
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptModel, std::string("bad layer spec: ") + e.what());
  }
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  validate(spec);
  return std::visit(overloaded{
                        [](const DenseSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<DenseLayer>(s); },
                        [](const Conv1dSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<Conv1dLayer>(s); },
                        [](const MaxPool1dSpec& s) -> std::unique_ptr<Layer> {
                          return std::make_unique<MaxPool1dLayer>(s);
                        },
                        [](const BatchNormSpec& s) -> std::unique_ptr<Layer> {
                          return std::make_unique<BatchNormLayer>(s);
                        },
                        [](const DropoutSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<DropoutLayer>(s); },
                        [](const LstmSpec& s) -> std::unique_ptr<Layer> { return std::make_unique<LstmLayer>(s); },
                    },
                    spec);
}

}  // namespace premov::gradkit
