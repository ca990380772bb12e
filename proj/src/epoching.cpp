// SPDX-License-Identifier: Apache-2.0
#include "premov/epoching.hpp"

#include <algorithm>
#include <cmath>

#include "premov/error.hpp"
#include "premov/random.hpp"

namespace premov::epoching {

ChannelLayout ChannelLayout::motor21() {
  return {{"F3", "Fz", "F4", "FC5", "FC1", "FC2", "FC6", "C3", "Cz", "C4", "CP5",
           "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "O1", "Oz", "O2"}};
}

sigproc::EegRecording select_channels(const sigproc::EegRecording& rec, const ChannelLayout& layout) {
  sigproc::EegRecording out;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.channel_names = layout.names;
  out.preprocessing_log = rec.preprocessing_log;
  out.data = Matrix(layout.names.size(), rec.samples());
  for (std::size_t i = 0; i < layout.names.size(); ++i) {
    const auto it = std::find(rec.channel_names.begin(), rec.channel_names.end(), layout.names[i]);
    if (it == rec.channel_names.end()) throw Error(Errc::ChannelNotFound, layout.names[i]);
    const auto src = static_cast<std::size_t>(it - rec.channel_names.begin());
    std::copy_n(rec.data.row(src).begin(), rec.samples(), out.data.row(i).begin());
  }
  nlohmann::ordered_json params;
  params["channels"] = layout.names;
  out.preprocessing_log.push_back({"select_channels", params});
  return out;
}

DesignMatrix lag_embed(const Matrix& eeg, std::size_t first, std::size_t last, std::size_t lag) {
  if (lag == 0 || first + 1 < lag || last < first || last >= eeg.cols())
    throw Error(Errc::ShapeError, "lag window outside the recording");
  DesignMatrix d;
  d.lag_count = lag;
  d.channel_count = eeg.rows();
  d.values = Matrix(last - first + 1, eeg.rows() * lag);
  for (std::size_t t = first; t <= last; ++t) {
    auto row = d.values.row(t - first);
    for (std::size_t n = 0; n < eeg.rows(); ++n) {
      const auto src = eeg.row(n);
      for (std::size_t l = 0; l < lag; ++l) row[n * lag + l] = src[t - l];
    }
  }
  return d;
}

std::size_t time_to_index(double seconds, double rate_hz) {
  return static_cast<std::size_t>(std::llround(seconds * rate_hz));
}

EpochSet epoch_trials(const sigproc::EegRecording& eeg, const sigproc::KinematicsTrack& kin,
                      const std::vector<dataio::TrialEvent>& events, std::size_t lag) {
  if (lag == 0) throw Error(Errc::ConfigError, "lag must be at least one sample");
  if (std::abs(eeg.sample_rate_hz - kin.sample_rate_hz) > 1e-9)
    throw Error(Errc::ShapeError, "EEG and kinematics must share a sample rate before epoching");
  const std::size_t available = std::min(eeg.samples(), kin.samples());

  EpochSet set;
  for (const auto& ev : events) {
    const std::size_t onset = time_to_index(ev.onset_s, eeg.sample_rate_hz);
    const std::size_t rest = time_to_index(ev.rest_s, eeg.sample_rate_hz);
    if (onset + 1 < lag || rest >= available || rest < onset) {
      set.dropped.push_back(ev.trial_id);
      continue;
    }
    TrialTensorPair pair;
    pair.trial_id = ev.trial_id;
    pair.onset_index = onset;
    pair.design = lag_embed(eeg.data, onset, rest, lag);
    pair.target = Matrix(rest - onset + 1, 3);
    for (std::size_t t = onset; t <= rest; ++t)
      for (std::size_t a = 0; a < 3; ++a) pair.target(t - onset, a) = kin.data(t, a);
    set.pairs.push_back(std::move(pair));
  }
  if (set.pairs.empty())
    throw Error(Errc::EmptyEpochSet, "no trial has a complete lag window (" +
                                         std::to_string(set.dropped.size()) + " dropped)");
  return set;
}

EpochSet epoch_trials(const dataio::ParticipantBundle& bundle, std::size_t lag) {
  return epoch_trials(bundle.recording, bundle.kinematics, bundle.events, lag);
}

SplitSizes default_split(std::size_t trials) {
  const std::size_t standard_total = kStandardSplit.train + kStandardSplit.val + kStandardSplit.test;
  if (trials >= standard_total) return kStandardSplit;
  const std::size_t held = std::max<std::size_t>(1, trials * kStandardSplit.test / standard_total);
  if (trials < 2 * held + 1)
    throw Error(Errc::NotEnoughTrials, "need at least 3 trials, have " + std::to_string(trials));
  return {trials - 2 * held, held, held};
}

TrialSplit split_trials(std::vector<TrialTensorPair> pairs, SplitSizes sizes, std::uint64_t seed) {
  const std::size_t needed = sizes.train + sizes.val + sizes.test;
  if (needed > pairs.size())
    throw Error(Errc::NotEnoughTrials, "split needs " + std::to_string(needed) + " trials, have " +
                                           std::to_string(pairs.size()));
  const auto order = seeded_permutation(pairs.size(), seed);
  TrialSplit split;
  for (std::size_t i = 0; i < needed; ++i) {
    auto& dest = i < sizes.train ? split.train : (i < sizes.train + sizes.val ? split.val : split.test);
    dest.push_back(std::move(pairs[order[i]]));
  }
  auto by_id = [](const TrialTensorPair& a, const TrialTensorPair& b) { return a.trial_id < b.trial_id; };
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.val.begin(), split.val.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

std::size_t lag_ms_to_samples(int lag_ms, double rate_hz) {
  const double samples = lag_ms * rate_hz / 1000.0;
  const auto rounded = std::llround(samples);
  if (lag_ms <= 0 || rounded < 1 || std::abs(samples - static_cast<double>(rounded)) > 1e-9)
    throw Error(Errc::ConfigError, "lag of " + std::to_string(lag_ms) + " ms is not a whole number of samples at " +
                                       std::to_string(rate_hz) + " Hz");
  return static_cast<std::size_t>(rounded);
}

}  // namespace premov::epoching
