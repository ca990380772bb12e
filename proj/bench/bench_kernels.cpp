// SPDX-License-Identifier: Apache-2.0
// Serial reference vs OpenMP kernels: wall time and max abs difference.
//
//   bench_kernels [repeats]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <vector>

#include "premov/kernels.hpp"
#include "premov/random.hpp"

using premov::kernels::Trans;
using h_clock = std::chrono::steady_clock;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * premov::uniform01(rng) - 1.0;
  return v;
}

double best_ms(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = h_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(h_clock::now() - t0).count());
  }
  return best;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
  std::printf("%-34s serial %9.2f ms  omp %9.2f ms  speedup %5.2fx  max|diff| %.2e\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, diff);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
  std::printf("threads: %d\n", premov::kernels::max_threads());

  struct Shape {
    const char* name;
    std::size_t m, n, k;
    Trans ta, tb;
  };
  // Dense layer forward, conv im2col product and the weight-gradient product.
  const Shape shapes[] = {
      {"gemm 64x128x525 (dense fwd)", 64, 128, 525, Trans::No, Trans::No},
      {"gemm 1600x256x147 (conv1 im2col)", 1600, 256, 147, Trans::No, Trans::No},
      {"gemm 147x256x1600 (conv1 dW)", 147, 256, 1600, Trans::Yes, Trans::No},
      {"gemm 512x512x512", 512, 512, 512, Trans::No, Trans::No},
  };
  for (const auto& s : shapes) {
    const auto a = random_vector(s.m * s.k, 1), b = random_vector(s.k * s.n, 2);
    std::vector<double> c_serial(s.m * s.n), c_omp(s.m * s.n);
    const double ts = best_ms(repeats, [&] {
      premov::kernels::serial::gemm(s.ta, s.tb, s.m, s.n, s.k, a, b, c_serial);
    });
    const double tp = best_ms(repeats, [&] { premov::kernels::gemm(s.ta, s.tb, s.m, s.n, s.k, a, b, c_omp); });
    report(s.name, ts, tp, max_diff(c_serial, c_omp));
  }

  // 32 channels, 60 s at 500 Hz, through the 3301-tap broad band-pass.
  const std::size_t rows = 32, len = 30000, taps_n = 3301;
  const auto taps = random_vector(taps_n, 3), x = random_vector(rows * len, 4);
  std::vector<double> y_serial(rows * len), y_omp(rows * len);
  const double ts = best_ms(repeats, [&] {
    premov::kernels::serial::fir_causal_rows(taps, rows, len, x, y_serial);
  });
  const double tp = best_ms(repeats, [&] { premov::kernels::fir_causal_rows(taps, rows, len, x, y_omp); });
  report("fir 32 x 30000, 3301 taps", ts, tp, max_diff(y_serial, y_omp));
  return 0;
}
