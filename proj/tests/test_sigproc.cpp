// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "premov/error.hpp"
#include "premov/sigproc.hpp"
#include "support.hpp"

using namespace premov;
using namespace premov::sigproc;

namespace {

// Windowed-sinc taps in long double, written from the textbook definition.
std::vector<long double> reference_lowpass(long double fc_over_fs, int taps) {
  const long double pi = std::numbers::pi_v<long double>;
  const long double m = (taps - 1) / 2.0L;
  std::vector<long double> h(static_cast<std::size_t>(taps));
  long double dc = 0.0L;
  for (int n = 0; n < taps; ++n) {
    const long double x = n - m;
    const long double ideal = x == 0.0L ? 2.0L * fc_over_fs : std::sin(2.0L * pi * fc_over_fs * x) / (pi * x);
    const long double w = 0.54L - 0.46L * std::cos(2.0L * pi * n / (taps - 1));
    h[static_cast<std::size_t>(n)] = ideal * w;
    dc += h[static_cast<std::size_t>(n)];
  }
  for (auto& v : h) v /= dc;
  return h;
}

double dft_mag(const std::vector<double>& h, double f, double fs) {
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    re += h[n] * std::cos(2.0 * std::numbers::pi * f / fs * static_cast<double>(n));
    im -= h[n] * std::sin(2.0 * std::numbers::pi * f / fs * static_cast<double>(n));
  }
  return std::hypot(re, im);
}

std::vector<double> sine(std::size_t n, double f, double fs, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

EegRecording make_recording(const Matrix& m) {
  EegRecording r;
  r.sample_rate_hz = 100.0;
  for (std::size_t c = 0; c < m.rows(); ++c) r.channel_names.push_back("E" + std::to_string(c));
  r.data = m;
  return r;
}

}  // namespace

TEST_CASE("tap counts follow the transition-width rule") {
  CHECK(taps_for_transition(0.5, 500.0) == 3301);
  CHECK(taps_for_transition(0.25, 100.0) == 1321);
  CHECK(taps_for_transition(0.5, 100.0) == 661);
  CHECK(taps_for_transition(1.0, 10.0) == 33);
}

TEST_CASE("design rejects bad cutoffs and even tap counts") {
  CHECK_THROWS_AS(design_fir({FilterKind::Lowpass, {50.0}, 100.0, 11}), Error);
  CHECK_THROWS_AS(design_fir({FilterKind::Lowpass, {60.0}, 100.0, 11}), Error);
  CHECK_THROWS_AS(design_fir({FilterKind::Bandpass, {3.0, 1.0}, 100.0, 11}), Error);
  try {
    design_fir({FilterKind::Lowpass, {2.0}, 100.0, 10});
    FAIL("expected InvalidTaps");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidTaps);
  }
  try {
    design_fir({FilterKind::Lowpass, {50.0}, 100.0, 11});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidCutoff);
  }
}

TEST_CASE("single tap just below Nyquist is the identity") {
  const auto f = design_fir({FilterKind::Lowpass, {50.0 * (1.0 - 1e-9)}, 100.0, 1});
  REQUIRE(f.coefficients.size() == 1);
  CHECK(f.coefficients[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("lowpass taps match the long-double windowed-sinc formula") {
  const auto f = design_fir({FilterKind::Lowpass, {2.0}, 100.0, 101});
  const auto want = reference_lowpass(2.0L / 100.0L, 101);
  for (std::size_t i = 0; i < 101; ++i)
    CHECK(std::abs(f.coefficients[i] - static_cast<double>(want[i])) < 1e-14);
  const auto peak = std::max_element(f.coefficients.begin(), f.coefficients.end());
  CHECK(peak - f.coefficients.begin() == 50);
}

TEST_CASE("taps are exactly symmetric for random designs") {
  testsupport::Gen g(21);
  for (int i = 0; i < 50; ++i) {
    const double fs = g.uniform(50.0, 1000.0);
    const int taps = 2 * static_cast<int>(g.index(1, 200)) + 1;
    const double lo = g.uniform(0.01, 0.2) * fs, hi = lo + g.uniform(0.01, 0.25) * fs;
    const FirFilter f = g.index(0, 1) ? design_fir({FilterKind::Bandpass, {lo, hi}, fs, taps})
                                      : design_fir({FilterKind::Lowpass, {lo}, fs, taps});
    for (std::size_t n = 0; n < f.coefficients.size(); ++n)
      CHECK(f.coefficients[n] == f.coefficients[f.coefficients.size() - 1 - n]);
    CHECK(std::abs(frequency_response(f, passband_center_hz(f.design))) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("delta band response: unity at 1.75 Hz, below -40 dB at 10 Hz") {
  const auto f = design_fir({FilterKind::Bandpass, {0.5, 3.0}, 100.0, taps_for_transition(0.25, 100.0)});
  CHECK(std::abs(20.0 * std::log10(dft_mag(f.coefficients, 1.75, 100.0))) <= 1.0);
  CHECK(20.0 * std::log10(dft_mag(f.coefficients, 10.0, 100.0)) <= -40.0);
}

TEST_CASE("filtfilt of zeros is zeros and rejects short input") {
  const auto f = design_fir({FilterKind::Lowpass, {2.0}, 100.0, 21});
  const std::vector<double> zeros(200, 0.0);
  for (double v : filtfilt(f, zeros)) CHECK(v == 0.0);
  try {
    filtfilt(f, std::vector<double>(63, 1.0));
    FAIL("expected SignalTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SignalTooShort);
  }
}

TEST_CASE("passband sine through the delta band: lag-0 peak and squared gain") {
  const auto f = design_fir({FilterKind::Bandpass, {0.5, 3.0}, 100.0, taps_for_transition(0.25, 100.0)});
  const std::size_t n = 20000;
  const auto x = sine(n, 1.5, 100.0);
  const auto y = filtfilt(f, x);
  const std::size_t lo = 5000, hi = n - 5000;
  int best_lag = 0;
  double best = -1e300;
  for (int lag = -40; lag <= 40; ++lag) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i] * y[static_cast<std::size_t>(static_cast<long>(i) + lag)];
    if (s > best) best = s, best_lag = lag;
  }
  CHECK(best_lag == 0);
  double ex = 0.0, ey = 0.0;
  for (std::size_t i = lo; i < hi; ++i) ex += x[i] * x[i], ey += y[i] * y[i];
  const double gain = dft_mag(f.coefficients, 1.5, 100.0);
  CHECK(std::sqrt(ey / ex) == doctest::Approx(gain * gain).epsilon(0.02));
}

TEST_CASE("filtfilt keeps even symmetry, scales linearly and matches the row version") {
  testsupport::Gen g(22);
  const auto f = design_fir({FilterKind::Bandpass, {1.0, 8.0}, 100.0, 41});
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t half = g.index(130, 400);
    auto x = g.vec(half);
    std::vector<double> sym(x.begin(), x.end());
    sym.insert(sym.end(), x.rbegin(), x.rend());
    const auto y = filtfilt(f, sym);
    for (std::size_t i = 0; i < sym.size(); ++i) CHECK(std::abs(y[i] - y[sym.size() - 1 - i]) < 1e-9);

    const double a = g.uniform(-5.0, 5.0);
    std::vector<double> ax(sym.size());
    for (std::size_t i = 0; i < sym.size(); ++i) ax[i] = a * sym[i];
    const auto ay = filtfilt(f, ax);
    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::abs(a * v));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(ay[i] - a * y[i]) <= 1e-12 * scale + 1e-300);
  }
  Matrix rows = g.matrix(3, 500);
  const Matrix out = filtfilt_rows(f, rows);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto one = filtfilt(f, rows.row(r));
    CHECK(std::vector<double>(out.row(r).begin(), out.row(r).end()) == one);
  }
}

TEST_CASE("downsample keeps every factor-th sample and composes") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(downsample(x, 5) == std::vector<double>{1, 6});
  CHECK(downsample(x, 1) == x);
  CHECK_THROWS_AS(downsample(x, 0), Error);
  testsupport::Gen g(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = g.vec(g.index(1, 200));
    const int a = static_cast<int>(g.index(1, 6)), b = static_cast<int>(g.index(1, 6));
    CHECK(downsample(downsample(v, a), b) == downsample(v, a * b));
  }
  auto rec = make_recording(Matrix(2, 5000, 1.0));
  rec.sample_rate_hz = 500.0;
  const auto d = downsample(rec, 5);
  CHECK(d.samples() == 1000);
  CHECK(d.sample_rate_hz == 100.0);
  CHECK(d.preprocessing_log.back().step == "downsample");
}

TEST_CASE("average reference zeroes column means") {
  const auto two = rereference_average(make_recording(Matrix(2, 1, std::vector<double>{3.0, 1.0})));
  CHECK(two.data(0, 0) == 1.0);
  CHECK(two.data(1, 0) == -1.0);
  const auto same = rereference_average(make_recording(Matrix(3, 4, 7.0)));
  for (double v : same.data.storage()) CHECK(v == 0.0);
  testsupport::Gen g(24);
  const auto r = rereference_average(make_recording(g.matrix(4, 100)));
  for (std::size_t t = 0; t < 100; ++t) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += r.data(c, t);
    CHECK(std::abs(s) < 1e-10);
  }
  try {
    rereference_average(make_recording(Matrix(1, 10, 1.0)));
    FAIL("expected NeedsMultipleChannels");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NeedsMultipleChannels);
  }
}

TEST_CASE("z-score uses the population deviation") {
  const Matrix m(1, 3, std::vector<double>{1, 2, 3});
  const auto stats = zscore_fit(m);
  CHECK(stats[0].mean == 2.0);
  CHECK(stats[0].std == doctest::Approx(0.816497).epsilon(1e-6));
  const auto z = zscore_apply(m, stats);
  CHECK(z(0, 0) == doctest::Approx(-1.224745).epsilon(1e-6));
  CHECK(z(0, 1) == 0.0);
  CHECK(z(0, 2) == doctest::Approx(1.224745).epsilon(1e-6));
  try {
    zscore_fit(Matrix(1, 3, 5.0));
    FAIL("expected ZeroVariance");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ZeroVariance);
  }
}

TEST_CASE("z-score property: unit moments on fit data, exact inverse") {
  testsupport::Gen g(25);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t rows = g.index(1, 6), cols = g.index(2, 300);
    Matrix m(rows, cols);
    for (auto& v : m.storage()) v = g.uniform(-1e3, 1e3) + 10.0 * g.normal();
    const auto stats = zscore_fit(m);
    const auto z = zscore_apply(m, stats);
    for (std::size_t r = 0; r < rows; ++r) {
      double mean = 0.0, sq = 0.0;
      for (double v : z.row(r)) mean += v;
      mean /= static_cast<double>(cols);
      for (double v : z.row(r)) sq += (v - mean) * (v - mean);
      CHECK(std::abs(mean) < 1e-10);
      CHECK(std::abs(std::sqrt(sq / static_cast<double>(cols)) - 1.0) < 1e-10);
    }
    const auto back = zscore_invert(z, stats);
    for (std::size_t i = 0; i < m.size(); ++i)
      CHECK(std::abs(back.storage()[i] - m.storage()[i]) <= 1e-10 * std::max(1.0, std::abs(m.storage()[i])));
  }
}

TEST_CASE("z-score stats fit on a train segment centre an unseen segment") {
  testsupport::Gen g(26);
  const std::size_t n = 4000;
  Matrix train(1, n), test(1, n);
  for (auto& v : train.storage()) v = 3.0 + 2.0 * g.normal();
  for (auto& v : test.storage()) v = 3.0 + 2.0 * g.normal();
  const auto z = zscore_apply(test, zscore_fit(train));
  double mean = 0.0, sq = 0.0;
  for (double v : z.storage()) mean += v;
  mean /= n;
  for (double v : z.storage()) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / n);
  CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(static_cast<double>(n)) + 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("min-max maps the fit range onto [0, 1] without clamping") {
  const Matrix m(3, 3, std::vector<double>{2, 0, 1, 4, 1, 2, 3, 2, 3});
  const auto ranges = minmax_fit(m);
  CHECK(ranges[0] == AxisRange{2.0, 4.0});
  const auto n = minmax_apply(m, ranges);
  CHECK(n(0, 0) == 0.0);
  CHECK(n(1, 0) == 1.0);
  CHECK(n(2, 0) == 0.5);
  const Matrix five(1, 3, std::vector<double>{5.0, 0.0, 0.0});
  CHECK(minmax_apply(five, ranges)(0, 0) == 1.5);
  try {
    minmax_fit(Matrix(3, 3, 1.0));
    FAIL("expected DegenerateRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateRange);
  }
  testsupport::Gen g(27);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix x(g.index(2, 50), 3);
    for (auto& v : x.storage()) v = g.uniform(-500.0, 500.0);
    const auto r = minmax_fit(x);
    const auto back = minmax_invert(minmax_apply(x, r), r);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::abs(back.storage()[i] - x.storage()[i]) <= 1e-12 * std::max(1.0, std::abs(x.storage()[i])));
  }
}

TEST_CASE("recording wrappers log fully parameterized steps") {
  testsupport::Gen g(28);
  auto rec = make_recording(g.matrix(2, 400));
  const auto f = design_fir({FilterKind::Lowpass, {5.0}, 100.0, 21});
  const auto out = apply_filter(rec, f);
  REQUIRE(out.preprocessing_log.size() == 1);
  const auto& p = out.preprocessing_log[0].params;
  CHECK(out.preprocessing_log[0].step == "fir_filtfilt");
  CHECK(p.dump().find("lowpass") != std::string::npos);
  CHECK(p.dump().find("21") != std::string::npos);
  CHECK(rec.preprocessing_log.empty());
}
