// SPDX-License-Identifier: Apache-2.0
#include "premov/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "premov/error.hpp"
#include "premov/kernels.hpp"

namespace premov::sigproc {

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Windowed ideal lowpass at normalized cutoff fc (cycles/sample), unscaled.
double ideal_lowpass(double fc, double offset) { return 2.0 * fc * sinc(2.0 * fc * offset); }

double hamming(int n, int taps) {
  if (taps == 1) return 1.0;
  return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (taps - 1));
}

nlohmann::ordered_json describe(const FirDesign& d) {
  return {{"kind", to_string(d.kind)},
          {"cutoffs_hz", d.cutoffs_hz},
          {"sample_rate_hz", d.sample_rate_hz},
          {"num_taps", d.num_taps},
          {"window", "hamming"}};
}

// Odd extension: the padding is the point reflection of the signal about its end samples.
std::vector<double> pad_odd(std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<double> out(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) out[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) out[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  return out;
}

void check_filterable(const FirFilter& filter, std::size_t len) {
  const std::size_t pad = 3 * filter.coefficients.size();
  if (len <= pad)
    throw Error(Errc::SignalTooShort, "signal of " + std::to_string(len) +
                                          " samples needs more than " + std::to_string(pad));
}

}  // namespace

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::Lowpass: return "lowpass";
    case FilterKind::Highpass: return "highpass";
    case FilterKind::Bandpass: return "bandpass";
  }
  return "lowpass";
}

FilterKind filter_kind_from_string(const std::string& name) {
  if (name == "lowpass") return FilterKind::Lowpass;
  if (name == "highpass") return FilterKind::Highpass;
  if (name == "bandpass") return FilterKind::Bandpass;
  throw Error(Errc::ConfigError, "unknown filter kind '" + name + "'");
}

int taps_for_transition(double transition_hz, double sample_rate_hz) {
  if (!(transition_hz > 0.0) || !(sample_rate_hz > 0.0))
    throw Error(Errc::InvalidTaps, "transition width and sample rate must be positive");
  // The small slack keeps exact ratios like 3.3/(0.5/500) = 3300 from rounding up to 3301
  // before the odd adjustment.
  auto taps = static_cast<int>(std::ceil(3.3 * sample_rate_hz / transition_hz - 1e-9));
  if (taps % 2 == 0) ++taps;
  return taps;
}

double passband_center_hz(const FirDesign& d) {
  switch (d.kind) {
    case FilterKind::Lowpass: return 0.0;
    case FilterKind::Highpass: return d.sample_rate_hz / 2.0;
    case FilterKind::Bandpass: return 0.5 * (d.cutoffs_hz[0] + d.cutoffs_hz[1]);
  }
  return 0.0;
}

FirFilter design_fir(const FirDesign& d) {
  if (d.num_taps < 1 || d.num_taps % 2 == 0)
    throw Error(Errc::InvalidTaps, "num_taps must be a positive odd integer, got " +
                                       std::to_string(d.num_taps));
  if (!(d.sample_rate_hz > 0.0)) throw Error(Errc::InvalidCutoff, "sample rate must be positive");
  const std::size_t expected_edges = d.kind == FilterKind::Bandpass ? 2 : 1;
  if (d.cutoffs_hz.size() != expected_edges)
    throw Error(Errc::InvalidCutoff, to_string(d.kind) + " needs " +
                                         std::to_string(expected_edges) + " cutoff(s)");
  const double nyquist = d.sample_rate_hz / 2.0;
  for (double f : d.cutoffs_hz) {
    if (!(f > 0.0) || !(f < nyquist))
      throw Error(Errc::InvalidCutoff,
                  "cutoff " + std::to_string(f) + " Hz outside (0, " + std::to_string(nyquist) + ")");
  }
  if (expected_edges == 2 && !(d.cutoffs_hz[0] < d.cutoffs_hz[1]))
    throw Error(Errc::InvalidCutoff, "bandpass edges must be strictly increasing");

  const int taps = d.num_taps;
  const double center = (taps - 1) / 2.0;
  FirFilter filter;
  filter.design = d;
  filter.coefficients.resize(static_cast<std::size_t>(taps));
  for (int n = 0; n < taps; ++n) {
    const double offset = n - center;
    double ideal = 0.0;
    switch (d.kind) {
      case FilterKind::Lowpass:
        ideal = ideal_lowpass(d.cutoffs_hz[0] / d.sample_rate_hz, offset);
        break;
      case FilterKind::Highpass:
        ideal = (offset == 0.0 ? 1.0 : 0.0) - ideal_lowpass(d.cutoffs_hz[0] / d.sample_rate_hz, offset);
        break;
      case FilterKind::Bandpass:
        ideal = ideal_lowpass(d.cutoffs_hz[1] / d.sample_rate_hz, offset) -
                ideal_lowpass(d.cutoffs_hz[0] / d.sample_rate_hz, offset);
        break;
    }
    filter.coefficients[static_cast<std::size_t>(n)] = ideal * hamming(n, taps);
  }
  // Symmetrize exactly; sin() of mirrored arguments can differ in the last bit.
  for (int n = 0; n < taps / 2; ++n) {
    auto& lo = filter.coefficients[static_cast<std::size_t>(n)];
    auto& hi = filter.coefficients[static_cast<std::size_t>(taps - 1 - n)];
    lo = hi = 0.5 * (lo + hi);
  }
  const double gain = std::abs(frequency_response(filter, passband_center_hz(d)));
  for (double& c : filter.coefficients) c /= gain;
  return filter;
}

std::complex<double> frequency_response(const FirFilter& filter, double freq_hz) {
  const auto& h = filter.coefficients;
  const double center = (static_cast<double>(h.size()) - 1.0) / 2.0;
  const double omega = 2.0 * std::numbers::pi * freq_hz / filter.design.sample_rate_hz;
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t n = 0; n < h.size(); ++n) {
    const double phase = -omega * (static_cast<double>(n) - center);
    acc += h[n] * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return acc;
}

std::vector<double> filtfilt(const FirFilter& filter, std::span<const double> signal) {
  check_filterable(filter, signal.size());
  const std::size_t pad = 3 * filter.coefficients.size();
  std::vector<double> ext = pad_odd(signal, pad);
  std::vector<double> tmp(ext.size());
  kernels::fir_causal(filter.coefficients, ext, tmp);
  std::reverse(tmp.begin(), tmp.end());
  kernels::fir_causal(filter.coefficients, tmp, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + signal.size())};
}

Matrix filtfilt_rows(const FirFilter& filter, const Matrix& signals) {
  const std::size_t rows = signals.rows();
  const std::size_t len = signals.cols();
  check_filterable(filter, len);
  const std::size_t pad = 3 * filter.coefficients.size();
  const std::size_t ext_len = len + 2 * pad;

  std::vector<double> ext(rows * ext_len);
  for (std::size_t r = 0; r < rows; ++r) {
    auto padded = pad_odd(signals.row(r), pad);
    std::copy(padded.begin(), padded.end(), ext.begin() + static_cast<std::ptrdiff_t>(r * ext_len));
  }
  std::vector<double> tmp(ext.size());
  auto reverse_rows = [&](std::vector<double>& buf) {
    for (std::size_t r = 0; r < rows; ++r) {
      auto first = buf.begin() + static_cast<std::ptrdiff_t>(r * ext_len);
      std::reverse(first, first + static_cast<std::ptrdiff_t>(ext_len));
    }
  };
  kernels::fir_causal_rows(filter.coefficients, rows, ext_len, ext, tmp);
  reverse_rows(tmp);
  kernels::fir_causal_rows(filter.coefficients, rows, ext_len, tmp, ext);
  reverse_rows(ext);

  Matrix out(rows, len);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(ext.begin() + static_cast<std::ptrdiff_t>(r * ext_len + pad), len, out.row(r).begin());
  return out;
}

std::vector<double> downsample(std::span<const double> signal, int factor) {
  if (factor <= 0) throw Error(Errc::InvalidFactor, "factor must be >= 1, got " + std::to_string(factor));
  std::vector<double> out;
  out.reserve(signal.size() / static_cast<std::size_t>(factor) + 1);
  for (std::size_t i = 0; i < signal.size(); i += static_cast<std::size_t>(factor)) out.push_back(signal[i]);
  return out;
}

Matrix downsample_columns(const Matrix& signals, int factor) {
  if (factor <= 0) throw Error(Errc::InvalidFactor, "factor must be >= 1, got " + std::to_string(factor));
  const auto f = static_cast<std::size_t>(factor);
  const std::size_t cols = (signals.cols() + f - 1) / f;
  Matrix out(signals.rows(), cols);
  for (std::size_t r = 0; r < signals.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = signals(r, c * f);
  return out;
}

Matrix downsample_rows(const Matrix& samples, int factor) {
  if (factor <= 0) throw Error(Errc::InvalidFactor, "factor must be >= 1, got " + std::to_string(factor));
  const auto f = static_cast<std::size_t>(factor);
  const std::size_t rows = (samples.rows() + f - 1) / f;
  Matrix out(rows, samples.cols());
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(samples.row(r * f).begin(), samples.cols(), out.row(r).begin());
  return out;
}

bool EegRecording::has_step(const std::string& step) const {
  return std::any_of(preprocessing_log.begin(), preprocessing_log.end(),
                     [&](const LogEntry& e) { return e.step == step; });
}

void EegRecording::validate() const {
  if (!(sample_rate_hz > 0.0)) throw Error(Errc::CorruptBundle, "EEG sample rate must be positive");
  if (data.rows() != channel_names.size())
    throw Error(Errc::CorruptBundle, "EEG has " + std::to_string(data.rows()) + " rows but " +
                                         std::to_string(channel_names.size()) + " channel names");
  std::set<std::string> seen;
  for (const auto& name : channel_names)
    if (!seen.insert(name).second) throw Error(Errc::CorruptBundle, "duplicate channel name " + name);
}

void KinematicsTrack::validate() const {
  if (!(sample_rate_hz > 0.0)) throw Error(Errc::CorruptBundle, "kinematics sample rate must be positive");
  if (data.cols() != 3)
    throw Error(Errc::CorruptBundle, "kinematics needs 3 columns, got " + std::to_string(data.cols()));
  if (normalization_params) {
    for (const auto& r : *normalization_params)
      if (!(r.min < r.max)) throw Error(Errc::DegenerateRange, "stored min must be below max");
  }
}

EegRecording apply_filter(const EegRecording& rec, const FirFilter& filter) {
  if (filter.design.sample_rate_hz != rec.sample_rate_hz)
    throw Error(Errc::InvalidCutoff, "filter designed for " + std::to_string(filter.design.sample_rate_hz) +
                                         " Hz applied to " + std::to_string(rec.sample_rate_hz) + " Hz data");
  EegRecording out = rec;
  out.data = filtfilt_rows(filter, rec.data);
  out.preprocessing_log.push_back({"fir_filtfilt", describe(filter.design)});
  return out;
}

EegRecording downsample(const EegRecording& rec, int factor) {
  EegRecording out = rec;
  out.data = downsample_columns(rec.data, factor);
  out.sample_rate_hz = rec.sample_rate_hz / factor;
  out.preprocessing_log.push_back(
      {"downsample", {{"factor", factor}, {"sample_rate_hz", out.sample_rate_hz}}});
  return out;
}

KinematicsTrack apply_filter(const KinematicsTrack& track, const FirFilter& filter) {
  if (filter.design.sample_rate_hz != track.sample_rate_hz)
    throw Error(Errc::InvalidCutoff, "filter sample rate does not match kinematics");
  Matrix by_axis(3, track.samples());
  for (std::size_t i = 0; i < track.samples(); ++i)
    for (std::size_t a = 0; a < 3; ++a) by_axis(a, i) = track.data(i, a);
  const Matrix filtered = filtfilt_rows(filter, by_axis);
  KinematicsTrack out = track;
  for (std::size_t i = 0; i < track.samples(); ++i)
    for (std::size_t a = 0; a < 3; ++a) out.data(i, a) = filtered(a, i);
  return out;
}

KinematicsTrack downsample(const KinematicsTrack& track, int factor) {
  KinematicsTrack out = track;
  out.data = downsample_rows(track.data, factor);
  out.sample_rate_hz = track.sample_rate_hz / factor;
  return out;
}

EegRecording rereference_average(const EegRecording& rec) {
  const std::size_t channels = rec.channels();
  if (channels < 2)
    throw Error(Errc::NeedsMultipleChannels, "average reference needs at least 2 channels");
  EegRecording out = rec;
  for (std::size_t s = 0; s < rec.samples(); ++s) {
    double mean = 0.0;
    for (std::size_t c = 0; c < channels; ++c) mean += rec.data(c, s);
    mean /= static_cast<double>(channels);
    for (std::size_t c = 0; c < channels; ++c) out.data(c, s) = rec.data(c, s) - mean;
  }
  out.preprocessing_log.push_back({"rereference_average", {{"channels", channels}}});
  return out;
}

std::vector<ChannelStats> zscore_fit(const Matrix& m) {
  std::vector<ChannelStats> stats(m.rows());
  const auto n = static_cast<double>(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) throw Error(Errc::ZeroVariance, "channel " + std::to_string(r) + " is constant");
    stats[r] = {mean, sd};
  }
  return stats;
}

Matrix zscore_apply(const Matrix& m, std::span<const ChannelStats> stats) {
  if (stats.size() != m.rows())
    throw Error(Errc::ShapeError, "stats for " + std::to_string(stats.size()) + " channels applied to " +
                                      std::to_string(m.rows()));
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = (m(r, c) - stats[r].mean) / stats[r].std;
  return out;
}

Matrix zscore_invert(const Matrix& m, std::span<const ChannelStats> stats) {
  if (stats.size() != m.rows()) throw Error(Errc::ShapeError, "stats/channel count mismatch");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c) * stats[r].std + stats[r].mean;
  return out;
}

AxisRanges minmax_fit(const Matrix& samples) {
  if (samples.cols() != 3 || samples.rows() == 0)
    throw Error(Errc::ShapeError, "min-max fit needs a nonempty [samples x 3] matrix");
  AxisRanges ranges;
  for (std::size_t a = 0; a < 3; ++a) {
    double lo = samples(0, a);
    double hi = lo;
    for (std::size_t i = 1; i < samples.rows(); ++i) {
      lo = std::min(lo, samples(i, a));
      hi = std::max(hi, samples(i, a));
    }
    if (!(hi > lo)) throw Error(Errc::DegenerateRange, "axis " + std::to_string(a) + " has max == min");
    ranges[a] = {lo, hi};
  }
  return ranges;
}

Matrix minmax_apply(const Matrix& samples, const AxisRanges& ranges) {
  Matrix out(samples.rows(), samples.cols());
  for (std::size_t i = 0; i < samples.rows(); ++i)
    for (std::size_t a = 0; a < 3; ++a)
      out(i, a) = (samples(i, a) - ranges[a].min) / (ranges[a].max - ranges[a].min);
  return out;
}

Matrix minmax_invert(const Matrix& samples, const AxisRanges& ranges) {
  Matrix out(samples.rows(), samples.cols());
  for (std::size_t i = 0; i < samples.rows(); ++i)
    for (std::size_t a = 0; a < 3; ++a)
      out(i, a) = samples(i, a) * (ranges[a].max - ranges[a].min) + ranges[a].min;
  return out;
}

AxisRanges minmax_fit(const KinematicsTrack& track) { return minmax_fit(track.data); }

KinematicsTrack minmax_apply(const KinematicsTrack& track, const AxisRanges& ranges) {
  KinematicsTrack out = track;
  out.data = minmax_apply(track.data, ranges);
  out.normalization_params = ranges;
  return out;
}

}  // namespace premov::sigproc
