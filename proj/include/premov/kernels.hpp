// SPDX-License-Identifier: Apache-2.0
#pragma once

// Hot numeric loops. Every kernel has an OpenMP-parallel version in
// premov::kernels and a plain serial version in premov::kernels::serial that
// is kept as the reference the tests and the benchmark compare against.

#include <cstddef>
#include <span>

namespace premov::kernels {

enum class Trans { No, Yes };

/// C[m×n] = op(A)·op(B) (+ C when accumulate). Row-major; op(A) is m×k and
/// op(B) is k×n. With Trans::Yes the operand is stored transposed.
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);

/// Causal FIR with zero initial state: y[i] = sum_j taps[j]·x[i-j].
void fir_causal(std::span<const double> taps, std::span<const double> x, std::span<double> y);

/// Same as fir_causal, applied to each of `rows` contiguous signals of length `len`.
void fir_causal_rows(std::span<const double> taps, std::size_t rows, std::size_t len,
                     std::span<const double> x, std::span<double> y);

namespace serial {

void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);

void fir_causal(std::span<const double> taps, std::span<const double> x, std::span<double> y);

void fir_causal_rows(std::span<const double> taps, std::size_t rows, std::size_t len,
                     std::span<const double> x, std::span<double> y);

}  // namespace serial

/// Number of OpenMP threads the parallel kernels will use.
int max_threads();

}  // namespace premov::kernels
