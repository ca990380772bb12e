// SPDX-License-Identifier: Apache-2.0
#include "premov/gradkit/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "premov/error.hpp"

namespace premov::gradkit {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDropoutStream = 0x9e3779b97f4a7c15ULL;
constexpr const char* kFormat = "premov-checkpoint-v1";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  return v;
}

}  // namespace

Sequential::Sequential(std::vector<LayerSpec> specs, std::uint64_t seed)
    : specs_(std::move(specs)), seed_(seed), dropout_rng_(seed ^ kDropoutStream) {
  std::mt19937_64 init_rng(seed);
  for (const auto& s : specs_) {
    layers_.push_back(make_layer(s));
    layers_.back()->initialize(init_rng);
  }
}

Sequential::Sequential(const Sequential& other) : Sequential(other.specs_, other.seed_) {
  load_state(other.state());
  dropout_rng_ = other.dropout_rng_;
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Var Sequential::forward(const Var& input, Mode mode) {
  Var x = input;
  for (auto& layer : layers_) x = layer->forward(x, mode, dropout_rng_);
  return x;
}

Tensor Sequential::predict(const Tensor& input) {
  return forward(Var::leaf(input, false), Mode::Eval).value();
}

std::vector<NamedVar> Sequential::parameters() const {
  std::vector<NamedVar> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    for (auto& p : layers_[i]->parameters()) out.push_back({std::to_string(i) + "." + p.name, p.var});
  return out;
}

std::vector<NamedVar> Sequential::buffers() const {
  std::vector<NamedVar> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    for (auto& p : layers_[i]->buffers()) out.push_back({std::to_string(i) + "." + p.name, p.var});
  return out;
}

std::size_t Sequential::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.var.numel();
  return n;
}

void Sequential::zero_grad() {
  for (auto& p : parameters()) p.var.zero_grad();
}

std::vector<NamedVar> Sequential::state_vars() const {
  std::vector<NamedVar> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto& p : layers_[i]->parameters()) out.push_back({std::to_string(i) + "." + p.name, p.var});
    for (auto& p : layers_[i]->buffers()) out.push_back({std::to_string(i) + "." + p.name, p.var});
  }
  return out;
}

std::vector<Tensor> Sequential::state() const {
  std::vector<Tensor> out;
  for (const auto& v : state_vars()) out.push_back(v.var.value());
  return out;
}

void Sequential::load_state(const std::vector<Tensor>& state) {
  auto vars = state_vars();
  if (vars.size() != state.size())
    throw Error(Errc::CorruptModel, "state has " + std::to_string(state.size()) + " tensors, model needs " +
                                        std::to_string(vars.size()));
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].var.shape() != state[i].shape)
      throw Error(Errc::CorruptModel, vars[i].name + ": expected shape " + shape_string(vars[i].var.shape()) +
                                          ", got " + shape_string(state[i].shape));
    vars[i].var.mutable_value().values = state[i].values;
  }
}

bool Sequential::all_finite() const {
  for (const auto& v : state_vars())
    for (double x : v.var.value().values)
      if (!std::isfinite(x)) return false;
  return true;
}

void save_checkpoint(const Sequential& model, const fs::path& dir, const std::string& config_hash,
                     const nlohmann::ordered_json& extra) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error(Errc::IoError, "cannot create " + dir.string());

  nlohmann::ordered_json manifest;
  manifest["format"] = kFormat;
  manifest["seed"] = model.seed();
  manifest["train_config_hash"] = config_hash;
  manifest["parameter_count"] = model.parameter_count();
  manifest["layers"] = nlohmann::ordered_json::array();
  for (const auto& s : model.specs()) manifest["layers"].push_back(to_json(s));
  manifest["tensors"] = nlohmann::ordered_json::array();
  std::vector<std::uint32_t> blob;
  for (const auto& v : model.state_vars()) {
    manifest["tensors"].push_back({{"name", v.name}, {"shape", v.var.shape()}});
    for (double x : v.var.value().values)
      blob.push_back(to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(x))));
  }
  manifest["extra"] = extra;

  std::ofstream json_out(dir / "model.json", std::ios::binary | std::ios::trunc);
  json_out << manifest.dump(2) << "\n";
  std::ofstream blob_out(dir / "model.f32", std::ios::binary | std::ios::trunc);
  blob_out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * 4));
  if (!json_out || !blob_out) throw Error(Errc::IoError, "failed writing checkpoint to " + dir.string());
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  std::ifstream json_in(dir / "model.json", std::ios::binary);
  if (!json_in) throw Error(Errc::MissingComponent, (dir / "model.json").string() + " not found");
  nlohmann::json manifest;
  try {
    std::stringstream ss;
    ss << json_in.rdbuf();
    manifest = nlohmann::json::parse(ss.str());
    if (manifest.at("format").get<std::string>() != kFormat) throw Error(Errc::CorruptModel, "unknown format");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptModel, std::string("model.json: ") + e.what());
  }

  std::vector<LayerSpec> specs;
  for (const auto& j : manifest.at("layers")) specs.push_back(layer_spec_from_json(j));
  Sequential model(specs, manifest.at("seed").get<std::uint64_t>());

  const auto vars = model.state_vars();
  std::size_t floats = 0;
  for (const auto& v : vars) floats += v.var.numel();
  if (!fs::is_regular_file(dir / "model.f32"))
    throw Error(Errc::MissingComponent, (dir / "model.f32").string() + " not found");
  if (fs::file_size(dir / "model.f32") != floats * 4)
    throw Error(Errc::CorruptModel, "model.f32 size does not match the layer specs");
  std::vector<std::uint32_t> blob(floats);
  std::ifstream blob_in(dir / "model.f32", std::ios::binary);
  blob_in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(floats * 4));

  std::vector<Tensor> state;
  std::size_t at = 0;
  for (const auto& v : vars) {
    Tensor t(v.var.shape());
    for (double& x : t.values) x = static_cast<double>(std::bit_cast<float>(to_little_endian(blob[at++])));
    state.push_back(std::move(t));
  }
  model.load_state(state);
  if (!model.all_finite()) throw Error(Errc::CorruptModel, "checkpoint holds non-finite weights");
  return {std::move(model), manifest.value("train_config_hash", std::string{}),
          manifest.value("extra", nlohmann::json::object())};
}

}  // namespace premov::gradkit
