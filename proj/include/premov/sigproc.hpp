// SPDX-License-Identifier: Apache-2.0
#pragma once

// FIR design, zero-phase filtering, decimation, re-referencing and the two
// normalizations used on EEG (z-score) and kinematics (min-max).

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "premov/matrix.hpp"

namespace premov::sigproc {

enum class FilterKind { Lowpass, Highpass, Bandpass };

std::string to_string(FilterKind kind);
FilterKind filter_kind_from_string(const std::string& name);

/// Parameters of a Hamming-windowed sinc design.
struct FirDesign {
  FilterKind kind = FilterKind::Lowpass;
  std::vector<double> cutoffs_hz;  // one edge, or two increasing edges for bandpass
  double sample_rate_hz = 0.0;
  int num_taps = 0;                // odd
};

struct FirFilter {
  std::vector<double> coefficients;
  FirDesign design;
};

/// Odd tap count from the Hamming rule of thumb: ceil(3.3·fs/transition), rounded up to odd.
int taps_for_transition(double transition_hz, double sample_rate_hz);

FirFilter design_fir(const FirDesign& design);

/// Single-pass complex response of the taps at `freq_hz`, referenced to the center tap
/// (so a symmetric design has a real, signed value).
std::complex<double> frequency_response(const FirFilter& filter, double freq_hz);

/// Frequency at which design_fir normalizes the gain to one.
double passband_center_hz(const FirDesign& design);

/// Forward-backward filtering with odd reflection padding of 3·num_taps samples.
std::vector<double> filtfilt(const FirFilter& filter, std::span<const double> signal);

/// filtfilt applied independently to every row of a channel-major matrix.
Matrix filtfilt_rows(const FirFilter& filter, const Matrix& signals);

/// Keeps samples 0, factor, 2·factor, ...
std::vector<double> downsample(std::span<const double> signal, int factor);
/// Decimates along columns (channel-major [channels × samples] input).
Matrix downsample_columns(const Matrix& signals, int factor);
/// Decimates along rows (sample-major [samples × k] input).
Matrix downsample_rows(const Matrix& samples, int factor);

/// One applied preprocessing step; `params` carries everything needed to replay it.
struct LogEntry {
  std::string step;
  nlohmann::ordered_json params;
  bool operator==(const LogEntry&) const = default;
};

struct EegRecording {
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_names;
  Matrix data;  // [channels × samples]
  std::vector<LogEntry> preprocessing_log;

  std::size_t channels() const noexcept { return data.rows(); }
  std::size_t samples() const noexcept { return data.cols(); }
  bool has_step(const std::string& step) const;
  /// Throws CorruptBundle when the shape or name invariants do not hold.
  void validate() const;
};

struct AxisRange {
  double min = 0.0;
  double max = 1.0;
  bool operator==(const AxisRange&) const = default;
};

using AxisRanges = std::array<AxisRange, 3>;

struct KinematicsTrack {
  double sample_rate_hz = 0.0;
  Matrix data;  // [samples × 3] as (x, y, z)
  std::optional<AxisRanges> normalization_params;

  std::size_t samples() const noexcept { return data.rows(); }
  void validate() const;
};

// Recording-level wrappers; each appends a fully parameterized log entry.
EegRecording apply_filter(const EegRecording& rec, const FirFilter& filter);
EegRecording downsample(const EegRecording& rec, int factor);
KinematicsTrack apply_filter(const KinematicsTrack& track, const FirFilter& filter);
KinematicsTrack downsample(const KinematicsTrack& track, int factor);

/// Subtracts the cross-channel mean from every sample column.
EegRecording rereference_average(const EegRecording& rec);

struct ChannelStats {
  double mean = 0.0;
  double std = 1.0;  // population standard deviation
  bool operator==(const ChannelStats&) const = default;
};

/// Per-row statistics of a channel-major matrix; throws ZeroVariance on a flat row.
std::vector<ChannelStats> zscore_fit(const Matrix& channel_major);
Matrix zscore_apply(const Matrix& channel_major, std::span<const ChannelStats> stats);
Matrix zscore_invert(const Matrix& channel_major, std::span<const ChannelStats> stats);

/// Per-column ranges of a [samples × 3] matrix; throws DegenerateRange when max == min.
AxisRanges minmax_fit(const Matrix& samples);
Matrix minmax_apply(const Matrix& samples, const AxisRanges& ranges);
Matrix minmax_invert(const Matrix& samples, const AxisRanges& ranges);

AxisRanges minmax_fit(const KinematicsTrack& track);
KinematicsTrack minmax_apply(const KinematicsTrack& track, const AxisRanges& ranges);

}  // namespace premov::sigproc
