// SPDX-License-Identifier: Apache-2.0
#include "premov/preprocess.hpp"

#include <cmath>

#include "premov/error.hpp"
#include "premov/sigproc.hpp"

namespace premov {

namespace {

const char* const kGuardedSteps[] = {"fir_filtfilt", "rereference_average", "downsample", "select_channels"};

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + name + ": " + e.what());
  }
}

int decimation_factor(double from_hz, double to_hz) {
  const double ratio = from_hz / to_hz;
  const auto factor = std::llround(ratio);
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9)
    throw Error(Errc::InvalidFactor, "cannot decimate " + std::to_string(from_hz) + " Hz to " + std::to_string(to_hz) +
                                         " Hz by an integer factor");
  return static_cast<int>(factor);
}

sigproc::FirFilter band_filter(const BandSpec& band, double rate) {
  return sigproc::design_fir({sigproc::FilterKind::Bandpass, {band.low_hz, band.high_hz}, rate,
                              sigproc::taps_for_transition(band.transition_hz, rate)});
}

}  // namespace

nlohmann::ordered_json to_json(const PreprocessConfig& cfg) {
  auto band = [](const BandSpec& b) {
    return nlohmann::ordered_json{{"low_hz", b.low_hz}, {"high_hz", b.high_hz}, {"transition_hz", b.transition_hz}};
  };
  nlohmann::ordered_json j;
  j["bandpass"] = band(cfg.bandpass);
  j["delta"] = band(cfg.delta);
  j["kinematics_lowpass"] = {{"cutoff_hz", cfg.kinematics_cutoff_hz}, {"transition_hz", cfg.kinematics_transition_hz}};
  j["target_rate_hz"] = cfg.target_rate_hz;
  j["channels"] = cfg.layout.names;
  return j;
}

dataio::ParticipantBundle preprocess_bundle(const dataio::ParticipantBundle& raw, const PreprocessConfig& cfg) {
  for (const char* step : kGuardedSteps)
    if (raw.recording.has_step(step))
      throw Error(Errc::StageAlreadyApplied, std::string("recording log already contains '") + step + "'");

  dataio::ParticipantBundle out = raw;
  auto& rec = out.recording;
  auto tag_last = [&rec](const char* name) { rec.preprocessing_log.back().params["stage"] = name; };

  rec = stage("bandpass", [&] { return sigproc::apply_filter(rec, band_filter(cfg.bandpass, rec.sample_rate_hz)); });
  tag_last("bandpass");
  rec = stage("rereference", [&] { return sigproc::rereference_average(rec); });
  rec = stage("downsample", [&] {
    return sigproc::downsample(rec, decimation_factor(rec.sample_rate_hz, cfg.target_rate_hz));
  });
  rec = stage("delta", [&] { return sigproc::apply_filter(rec, band_filter(cfg.delta, rec.sample_rate_hz)); });
  tag_last("delta");
  rec = stage("select_channels", [&] { return epoching::select_channels(rec, cfg.layout); });

  auto& kin = out.kinematics;
  const double kin_rate = kin.sample_rate_hz;
  const sigproc::FirDesign lowpass{sigproc::FilterKind::Lowpass, {cfg.kinematics_cutoff_hz}, kin_rate,
                                   sigproc::taps_for_transition(cfg.kinematics_transition_hz, kin_rate)};
  kin = stage("kinematics_lowpass", [&] { return sigproc::apply_filter(kin, sigproc::design_fir(lowpass)); });
  rec.preprocessing_log.push_back({"kinematics_lowpass",
                                   {{"cutoff_hz", cfg.kinematics_cutoff_hz},
                                    {"transition_hz", cfg.kinematics_transition_hz},
                                    {"sample_rate_hz", kin_rate},
                                    {"num_taps", lowpass.num_taps}}});
  const int kin_factor = stage("kinematics_downsample", [&] { return decimation_factor(kin_rate, cfg.target_rate_hz); });
  kin = sigproc::downsample(kin, kin_factor);
  rec.preprocessing_log.push_back(
      {"kinematics_downsample", {{"factor", kin_factor}, {"sample_rate_hz", kin.sample_rate_hz}}});

  stage("validate", [&] {
    out.validate();
    return 0;
  });
  return out;
}

}  // namespace premov
