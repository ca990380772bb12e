// SPDX-License-Identifier: Apache-2.0
#pragma once

// Channel selection, per-trial segmentation and lag embedding.
//
// A design row for sample t holds, channel by channel, the EEG values at
// t, t-1, ..., t-L+1: feature index n·L + l is channel n at lag l.

#include <cstdint>
#include <string>
#include <vector>

#include "premov/dataio.hpp"
#include "premov/matrix.hpp"
#include "premov/sigproc.hpp"

namespace premov::epoching {

struct ChannelLayout {
  std::vector<std::string> names;

  /// F3 ... O2: the 21 fronto-central, centro-parietal and occipital electrodes.
  static ChannelLayout motor21();
};

sigproc::EegRecording select_channels(const sigproc::EegRecording& rec, const ChannelLayout& layout);

struct DesignMatrix {
  Matrix values;  // [rows × channel_count·lag_count]
  std::size_t lag_count = 0;
  std::size_t channel_count = 0;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t width() const noexcept { return values.cols(); }
  double at(std::size_t row, std::size_t channel, std::size_t lag) const {
    return values(row, channel * lag_count + lag);
  }
};

/// Lag-embeds samples first..last (inclusive) of a channel-major matrix.
/// Requires first + 1 >= lag.
DesignMatrix lag_embed(const Matrix& channel_major, std::size_t first, std::size_t last, std::size_t lag);

struct TrialTensorPair {
  int trial_id = 0;
  std::size_t onset_index = 0;  // sample index of the first row
  DesignMatrix design;
  Matrix target;  // [rows × 3]
};

struct EpochSet {
  std::vector<TrialTensorPair> pairs;
  std::vector<int> dropped;  // trials whose lag window would precede the recording
};

/// Sample index of a time stamp at `rate_hz`.
std::size_t time_to_index(double seconds, double rate_hz);

/// Cuts each trial from onset to rest (inclusive) with its lag window. Both signals must
/// share one sample rate. Throws EmptyEpochSet when no trial survives.
EpochSet epoch_trials(const sigproc::EegRecording& eeg, const sigproc::KinematicsTrack& kin,
                      const std::vector<dataio::TrialEvent>& events, std::size_t lag);
EpochSet epoch_trials(const dataio::ParticipantBundle& bundle, std::size_t lag);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  bool operator==(const SplitSizes&) const = default;
};

/// 234 / 30 / 30 of 294 trials.
constexpr SplitSizes kStandardSplit{234, 30, 30};

/// 234/30/30 when at least 294 trials exist, otherwise the same proportions
/// (validation and test each floor(n·30/294), at least 1; the rest trains).
SplitSizes default_split(std::size_t trials);

struct TrialSplit {
  std::vector<TrialTensorPair> train;
  std::vector<TrialTensorPair> val;
  std::vector<TrialTensorPair> test;
};

/// Seeded Fisher-Yates shuffle, then consecutive partitions; each part is
/// returned sorted by trial id.
TrialSplit split_trials(std::vector<TrialTensorPair> pairs, SplitSizes sizes, std::uint64_t seed);

/// 150 ms at 100 Hz -> 15 samples. Throws ConfigError unless the lag is a whole number of samples.
std::size_t lag_ms_to_samples(int lag_ms, double rate_hz);

}  // namespace premov::epoching
