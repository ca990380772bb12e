// SPDX-License-Identifier: Apache-2.0
#include "premov/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

#include <omp.h>

namespace premov::kernels {

namespace {

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kDepthBlock = 256;
constexpr std::size_t kFirChunk = 4096;
// Below this many multiply-adds the thread start-up costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 16;

// Transposes a rows×cols row-major block into cols×rows.
std::vector<double> transposed(std::span<const double> src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  return out;
}

}  // namespace

void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  assert(a.size() >= m * k && b.size() >= k * n && c.size() >= m * n);
  if (!accumulate) std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(m * n), 0.0);
  if (m == 0 || n == 0 || k == 0) return;

  std::vector<double> b_copy;
  const double* bp = b.data();
  if (trans_b == Trans::Yes) {
    b_copy = transposed(b, n, k);
    bp = b_copy.data();
  }
  const double* ap = a.data();
  const std::size_t a_row = trans_a == Trans::No ? k : 1;
  const std::size_t a_col = trans_a == Trans::No ? 1 : m;
  double* cp = c.data();

  const std::size_t blocks = (m + kRowBlock - 1) / kRowBlock;
  const bool parallel = m * n * k >= kParallelWork && blocks > 1;

#pragma omp parallel if (parallel)
  for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
    const std::size_t p1 = std::min(k, p0 + kDepthBlock);
#pragma omp for schedule(static)
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      const std::size_t i0 = blk * kRowBlock;
      const std::size_t rows = std::min(kRowBlock, m - i0);
      if (rows == kRowBlock) {
        double* c0 = cp + (i0 + 0) * n;
        double* c1 = cp + (i0 + 1) * n;
        double* c2 = cp + (i0 + 2) * n;
        double* c3 = cp + (i0 + 3) * n;
        for (std::size_t p = p0; p < p1; ++p) {
          const double a0 = ap[(i0 + 0) * a_row + p * a_col];
          const double a1 = ap[(i0 + 1) * a_row + p * a_col];
          const double a2 = ap[(i0 + 2) * a_row + p * a_col];
          const double a3 = ap[(i0 + 3) * a_row + p * a_col];
          // ReLU outputs make whole runs of zeros common.
          if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0) continue;
          const double* br = bp + p * n;
#pragma omp simd
          for (std::size_t j = 0; j < n; ++j) {
            const double bv = br[j];
            c0[j] += a0 * bv;
            c1[j] += a1 * bv;
            c2[j] += a2 * bv;
            c3[j] += a3 * bv;
          }
        }
      } else {
        for (std::size_t i = i0; i < i0 + rows; ++i) {
          double* ci = cp + i * n;
          for (std::size_t p = p0; p < p1; ++p) {
            const double av = ap[i * a_row + p * a_col];
            if (av == 0.0) continue;
            const double* br = bp + p * n;
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * br[j];
          }
        }
      }
    }
  }
}

void fir_causal(std::span<const double> taps, std::span<const double> x, std::span<double> y) {
  fir_causal_rows(taps, 1, x.size(), x, y);
}

void fir_causal_rows(std::span<const double> taps, std::size_t rows, std::size_t len,
                     std::span<const double> x, std::span<double> y) {
  assert(x.size() >= rows * len && y.size() >= rows * len);
  const std::size_t ntaps = taps.size();
  const std::size_t chunks = (len + kFirChunk - 1) / kFirChunk;
  const std::size_t jobs = rows * chunks;
  const bool parallel = rows * len * ntaps >= kParallelWork && jobs > 1;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t job = 0; job < jobs; ++job) {
    const std::size_t r = job / chunks;
    const std::size_t i0 = (job % chunks) * kFirChunk;
    const std::size_t i1 = std::min(len, i0 + kFirChunk);
    const double* xr = x.data() + r * len;
    double* yr = y.data() + r * len;
    std::fill(yr + i0, yr + i1, 0.0);
    for (std::size_t j = 0; j < ntaps && j < i1; ++j) {
      const double h = taps[j];
      const std::size_t start = std::max(i0, j);
#pragma omp simd
      for (std::size_t i = start; i < i1; ++i) yr[i] += h * xr[i - j];
    }
  }
}

int max_threads() { return omp_get_max_threads(); }

namespace serial {

void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a == Trans::No ? a[i * k + p] : a[p * m + i];
        const double bv = trans_b == Trans::No ? b[p * n + j] : b[j * k + p];
        s += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

void fir_causal(std::span<const double> taps, std::span<const double> x, std::span<double> y) {
  const std::size_t len = x.size();
  for (std::size_t i = 0; i < len; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < taps.size() && j <= i; ++j) s += taps[j] * x[i - j];
    y[i] = s;
  }
}

void fir_causal_rows(std::span<const double> taps, std::size_t rows, std::size_t len,
                     std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r)
    fir_causal(taps, x.subspan(r * len, len), y.subspan(r * len, len));
}

}  // namespace serial

}  // namespace premov::kernels
