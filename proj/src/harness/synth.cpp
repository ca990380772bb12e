// SPDX-License-Identifier: Apache-2.0
#include "premov/harness/synth.hpp"

#include <cmath>
#include <random>

#include "premov/epoching.hpp"
#include "premov/error.hpp"
#include "premov/random.hpp"
#include "premov/sigproc.hpp"

namespace premov::harness {

namespace {

using nlohmann::ordered_json;

struct HiddenLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> w;  // [out × in]
  std::vector<double> b;
};

// Evaluates either coupling on one lag window laid out as n·L + l.
struct CouplingNet {
  bool linear = true;
  std::size_t channels = 0, lag = 0;
  std::array<double, 3> alpha{};
  std::vector<double> beta;           // linear: [3 × N·L]
  std::vector<double> filters;        // nonlinear: first layer [H0 × N·L]
  std::vector<double> filter_bias;    // [H0]
  std::vector<HiddenLayer> deeper;    // further ReLU layers
  std::vector<double> readout;        // [3 × H_last]

  std::array<double, 3> operator()(std::span<const double> x) const {
    const std::size_t width = channels * lag;
    std::array<double, 3> y = alpha;
    if (linear) {
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < width; ++i) y[a] += beta[a * width + i] * x[i];
      return y;
    }
    std::vector<double> h(filter_bias.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
      double s = filter_bias[j];
      for (std::size_t i = 0; i < width; ++i) s += filters[j * width + i] * x[i];
      h[j] = std::max(0.0, s);
    }
    for (const auto& layer : deeper) {
      std::vector<double> next(layer.out);
      for (std::size_t o = 0; o < layer.out; ++o) {
        double s = layer.b[o];
        for (std::size_t i = 0; i < layer.in; ++i) s += layer.w[o * layer.in + i] * h[i];
        next[o] = std::max(0.0, s);
      }
      h = std::move(next);
    }
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t j = 0; j < h.size(); ++j) y[a] += readout[a * h.size() + j] * h[j];
    return y;
  }
};

CouplingNet draw_coupling(const SynthSpec& spec, std::mt19937_64& rng) {
  CouplingNet net;
  net.channels = spec.channels;
  net.lag = spec.lag;
  const std::size_t width = spec.channels * spec.lag;
  if (const auto* lin = std::get_if<LinearCoupling>(&spec.coupling)) {
    net.alpha = lin->alpha;
    net.beta = lin->beta;
    if (net.beta.empty()) {
      // Magnitudes kept away from zero so relative recovery errors stay meaningful.
      net.beta.resize(3 * width);
      for (auto& v : net.beta) {
        const double mag = 0.5 + uniform01(rng);
        v = (uniform01(rng) < 0.5 ? -mag : mag) / std::sqrt(static_cast<double>(width));
      }
      for (auto& a : net.alpha) a = 2.0 * uniform01(rng) - 1.0;
    }
    if (net.beta.size() != 3 * width)
      throw Error(Errc::ConfigError, "linear coupling beta must hold 3·channels·lag values");
    return net;
  }

  const auto& nl = std::get<NonlinearCoupling>(spec.coupling);
  std::mt19937_64 wrng(nl.seed);
  net.linear = false;
  const std::size_t h0 = nl.hidden.front();
  net.filters.assign(h0 * width, 0.0);
  net.filter_bias.assign(h0, 0.0);
  const double bump_width = std::max(1.0, static_cast<double>(spec.lag) / 6.0);
  for (std::size_t j = 0; j < h0; ++j) {
    std::vector<double> u(spec.channels), g(spec.lag);
    for (auto& v : u) v = standard_normal(wrng);
    const double center = uniform01(wrng) * static_cast<double>(spec.lag - 1);
    for (std::size_t l = 0; l < spec.lag; ++l) {
      const double d = (static_cast<double>(l) - center) / bump_width;
      g[l] = std::exp(-0.5 * d * d);
    }
    for (std::size_t n = 0; n < spec.channels; ++n)
      for (std::size_t l = 0; l < spec.lag; ++l) net.filters[j * width + n * spec.lag + l] = u[n] * g[l];
  }
  std::size_t prev = h0;
  for (std::size_t k = 1; k < nl.hidden.size(); ++k) {
    HiddenLayer layer{prev, nl.hidden[k], std::vector<double>(nl.hidden[k] * prev), std::vector<double>(nl.hidden[k], 0.0)};
    const double sd = std::sqrt(2.0 / static_cast<double>(prev));
    for (auto& v : layer.w) v = sd * standard_normal(wrng);
    net.deeper.push_back(std::move(layer));
    prev = nl.hidden[k];
  }
  net.readout.resize(3 * prev);
  for (auto& v : net.readout) v = standard_normal(wrng) / std::sqrt(static_cast<double>(prev));
  return net;
}

ordered_json truth_json(const SynthSpec& spec, const CouplingNet& net) {
  ordered_json j;
  j["spec"] = to_json(spec);
  j["channels"] = net.channels;
  j["lag"] = net.lag;
  j["feature_order"] = "channel,lag";
  j["alpha"] = net.alpha;
  if (net.linear) {
    j["type"] = "linear";
    j["beta"] = net.beta;
  } else {
    j["type"] = "nonlinear";
    j["filters"] = net.filters;
    j["filter_bias"] = net.filter_bias;
    auto& deeper = j["deeper"] = ordered_json::array();
    for (const auto& l : net.deeper) deeper.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
    j["readout"] = net.readout;
  }
  return j;
}

CouplingNet net_from_truth(const nlohmann::json& j) {
  CouplingNet net;
  net.channels = j.at("channels").get<std::size_t>();
  net.lag = j.at("lag").get<std::size_t>();
  net.alpha = j.at("alpha").get<std::array<double, 3>>();
  net.linear = j.at("type").get<std::string>() == "linear";
  if (net.linear) {
    net.beta = j.at("beta").get<std::vector<double>>();
    return net;
  }
  net.filters = j.at("filters").get<std::vector<double>>();
  net.filter_bias = j.at("filter_bias").get<std::vector<double>>();
  for (const auto& l : j.at("deeper"))
    net.deeper.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                          l.at("w").get<std::vector<double>>(), l.at("b").get<std::vector<double>>()});
  net.readout = j.at("readout").get<std::vector<double>>();
  return net;
}

std::vector<std::string> channel_names(std::size_t n) {
  const auto motor = epoching::ChannelLayout::motor21().names;
  if (n == motor.size()) return motor;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("S" + std::to_string(i + 1));
  return names;
}

}  // namespace

void SynthSpec::validate() const {
  if (channels == 0 || lag == 0 || trials == 0 || trial_samples < 2)
    throw Error(Errc::ConfigError, "synthetic spec needs channels, lag, trials >= 1 and trial_samples >= 2");
  if (gap_samples == 0) throw Error(Errc::ConfigError, "gap_samples must be >= 1");
  if (!(noise_sigma >= 0.0)) throw Error(Errc::ConfigError, "noise_sigma must be >= 0");
  if (!(sample_rate_hz > 0.0)) throw Error(Errc::ConfigError, "sample_rate_hz must be > 0");
  if (!(sensor_noise >= 0.0)) throw Error(Errc::ConfigError, "sensor_noise must be >= 0");
  if (sources == 0 && sensor_noise > 0.0)
    throw Error(Errc::ConfigError, "sensor_noise applies to mixed sources only; set it to 0 with sources = 0");
  if (!(std::abs(ar_coefficient) < 1.0)) throw Error(Errc::ConfigError, "ar_coefficient must lie in (-1, 1)");
  if (const auto* nl = std::get_if<NonlinearCoupling>(&coupling)) {
    if (nl->hidden.empty()) throw Error(Errc::ConfigError, "nonlinear coupling needs at least one hidden layer");
    for (auto h : nl->hidden)
      if (h == 0) throw Error(Errc::ConfigError, "hidden widths must be >= 1");
  }
}

SynthSpec nonlinear_preset(std::uint64_t seed) {
  SynthSpec s;
  s.channels = 21;
  s.lag = 25;
  s.trials = 200;
  s.trial_samples = 30;
  s.gap_samples = 10;
  s.noise_sigma = 0.05;
  s.coupling = NonlinearCoupling{{8}, seed + 1};
  s.seed = seed;
  return s;
}

ordered_json to_json(const SynthSpec& s) {
  ordered_json j;
  j["participant_id"] = s.participant_id;
  j["channels"] = s.channels;
  j["lag"] = s.lag;
  j["trials"] = s.trials;
  j["trial_samples"] = s.trial_samples;
  j["gap_samples"] = s.gap_samples;
  j["sample_rate_hz"] = s.sample_rate_hz;
  j["sources"] = s.sources;
  j["sensor_noise"] = s.sensor_noise;
  j["ar_coefficient"] = s.ar_coefficient;
  j["noise_sigma"] = s.noise_sigma;
  j["seed"] = s.seed;
  if (const auto* lin = std::get_if<LinearCoupling>(&s.coupling)) {
    j["coupling"] = {{"type", "linear"}, {"alpha", lin->alpha}, {"beta", lin->beta}};
  } else {
    const auto& nl = std::get<NonlinearCoupling>(s.coupling);
    j["coupling"] = {{"type", "nonlinear"}, {"hidden", nl.hidden}, {"seed", nl.seed}};
  }
  return j;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known{"participant_id", "channels",       "lag",         "trials",
                                              "trial_samples",  "gap_samples",    "sample_rate_hz",
                                              "ar_coefficient", "noise_sigma",    "seed",        "coupling",
                                              "sources",        "sensor_noise"};
  if (!j.is_object()) throw Error(Errc::ConfigError, "synthetic spec must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(Errc::ConfigError, "unknown synthetic spec key '" + key + "'");
  try {
    SynthSpec s;
    s.participant_id = j.value("participant_id", s.participant_id);
    s.channels = j.value("channels", s.channels);
    s.lag = j.value("lag", s.lag);
    s.trials = j.value("trials", s.trials);
    s.trial_samples = j.value("trial_samples", s.trial_samples);
    s.gap_samples = j.value("gap_samples", s.gap_samples);
    s.sample_rate_hz = j.value("sample_rate_hz", s.sample_rate_hz);
    s.sources = j.value("sources", s.sources);
    s.sensor_noise = j.value("sensor_noise", s.sensor_noise);
    s.ar_coefficient = j.value("ar_coefficient", s.ar_coefficient);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.seed = j.value("seed", s.seed);
    if (j.contains("coupling")) {
      const auto& c = j.at("coupling");
      const auto type = c.at("type").get<std::string>();
      if (type == "linear") {
        LinearCoupling lin;
        lin.alpha = c.value("alpha", lin.alpha);
        lin.beta = c.value("beta", lin.beta);
        s.coupling = lin;
      } else if (type == "nonlinear") {
        NonlinearCoupling nl;
        nl.hidden = c.value("hidden", nl.hidden);
        nl.seed = c.value("seed", nl.seed);
        s.coupling = nl;
      } else {
        throw Error(Errc::ConfigError, "coupling type must be linear or nonlinear");
      }
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, std::string("bad synthetic spec: ") + e.what());
  }
}

SynthOutput synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  CouplingNet net = draw_coupling(spec, rng);

  const std::size_t lead = spec.lag + 10;
  const std::size_t stride = spec.trial_samples + spec.gap_samples;
  const std::size_t samples = lead + spec.trials * stride + 10;
  const std::size_t n = spec.channels, lag = spec.lag, width = n * lag;

  std::mt19937_64 eeg_rng(splitmix64(spec.seed ^ 0xeeeULL));
  const double a = spec.ar_coefficient, drive = std::sqrt(1.0 - a * a);
  auto ar_rows = [&](std::size_t rows) {
    Matrix m(rows, samples);
    for (std::size_t r = 0; r < rows; ++r) {
      double v = standard_normal(eeg_rng);
      for (std::size_t t = 0; t < samples; ++t) {
        if (t > 0) v = a * v + drive * standard_normal(eeg_rng);
        m(r, t) = v;
      }
    }
    return m;
  };
  Matrix eeg(n, samples);
  if (spec.sources == 0) {
    eeg = ar_rows(n);
  } else {
    const std::size_t k = spec.sources;
    const Matrix src = ar_rows(k);
    std::vector<double> mixing(n * k);
    for (auto& v : mixing) v = standard_normal(eeg_rng) / std::sqrt(static_cast<double>(k));
    const Matrix sensor = ar_rows(n);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t t = 0; t < samples; ++t) {
        double v = spec.sensor_noise * sensor(c, t);
        for (std::size_t q = 0; q < k; ++q) v += mixing[c * k + q] * src(q, t);
        eeg(c, t) = v;
      }
  }
  const auto stats = sigproc::zscore_fit(eeg);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t t = 0; t < samples; ++t)
      eeg(c, t) = static_cast<double>(static_cast<float>((eeg(c, t) - stats[c].mean) / stats[c].std));

  std::vector<double> window(width);
  auto fill_window = [&](std::size_t t) {
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t l = 0; l < lag; ++l) window[c * lag + l] = t >= l ? eeg(c, t - l) : 0.0;
  };
  if (!net.linear) {
    // Each hidden unit's pre-activation is standardized over the recording.
    const std::size_t h0 = net.filter_bias.size();
    std::vector<double> sum(h0, 0.0), sq(h0, 0.0);
    for (std::size_t t = 0; t < samples; ++t) {
      fill_window(t);
      for (std::size_t j = 0; j < h0; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < width; ++i) s += net.filters[j * width + i] * window[i];
        sum[j] += s;
        sq[j] += s * s;
      }
    }
    for (std::size_t j = 0; j < h0; ++j) {
      const double mean = sum[j] / static_cast<double>(samples);
      const double sd = std::sqrt(std::max(sq[j] / static_cast<double>(samples) - mean * mean, 1e-300));
      for (std::size_t i = 0; i < width; ++i) net.filters[j * width + i] /= sd;
      net.filter_bias[j] = -mean / sd;
    }
  }

  std::mt19937_64 noise_rng(splitmix64(spec.seed ^ 0x5eedULL));
  Matrix kin(samples, 3);
  for (std::size_t t = 0; t < samples; ++t) {
    fill_window(t);
    const auto y = net(window);
    for (std::size_t ax = 0; ax < 3; ++ax) {
      const double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * standard_normal(noise_rng) : 0.0;
      kin(t, ax) = y[ax] + noise;
    }
  }

  SynthOutput out;
  auto& b = out.bundle;
  b.participant_id = spec.participant_id;
  b.recording.sample_rate_hz = spec.sample_rate_hz;
  b.recording.channel_names = channel_names(n);
  b.recording.data = std::move(eeg);
  b.recording.preprocessing_log.push_back({"synthesize", to_json(spec)});
  b.kinematics.sample_rate_hz = spec.sample_rate_hz;
  b.kinematics.data = std::move(kin);
  b.provenance = {"synthetic", false};
  for (std::size_t k = 0; k < spec.trials; ++k) {
    const std::size_t onset = lead + k * stride;
    b.events.push_back({static_cast<int>(k + 1), static_cast<double>(onset) / spec.sample_rate_hz,
                        static_cast<double>(onset + spec.trial_samples - 1) / spec.sample_rate_hz});
  }
  b.validate();

  if (net.linear) out.planted = {net.alpha, net.beta};
  out.truth = truth_json(spec, net);
  return out;
}

std::array<double, 3> coupling_response(const nlohmann::json& truth, std::span<const double> window) {
  const CouplingNet net = net_from_truth(truth);
  if (window.size() != net.channels * net.lag) throw Error(Errc::ShapeError, "window width does not match the coupling");
  return net(window);
}

}  // namespace premov::harness
