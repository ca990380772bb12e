// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable primitives. Sequence tensors are laid out [batch, time, channels].

#include <cstdint>
#include <random>

#include "premov/gradkit/tensor.hpp"

namespace premov::gradkit {

/// x[B, in] · w[in, out] + b[out].
Var dense(const Var& x, const Var& w, const Var& b);

Var relu(const Var& x);

/// 'same' zero-padded cross-correlation. x[B, T, Cin], w[K, Cin, Cout], b[Cout].
Var conv1d_same(const Var& x, const Var& w, const Var& b);

/// Non-overlapping max over time windows: [B, T, C] -> [B, T / window, C].
Var maxpool1d(const Var& x, std::size_t window);

struct BatchStats {
  std::vector<double> mean;
  std::vector<double> var;  // biased
};

/// Normalizes over every axis but the last with the batch's own statistics.
Var batchnorm_train(const Var& x, const Var& gamma, const Var& beta, double epsilon, BatchStats* stats_out);

/// Normalizes with fixed statistics (inference).
Var batchnorm_eval(const Var& x, const Var& gamma, const Var& beta, std::span<const double> mean,
                   std::span<const double> var, double epsilon);

/// Inverted dropout: survivors are scaled by 1 / (1 - rate).
Var dropout(const Var& x, double rate, std::mt19937_64& rng);

/// Runs an LSTM over x[B, T, I] and returns the final hidden state [B, H].
/// w_x[I, 4H], w_h[H, 4H], b[4H], gate blocks ordered input, forget, cell, output.
Var lstm_last(const Var& x, const Var& w_x, const Var& w_h, const Var& b);

/// Mean of squared differences over all elements.
Var mse(const Var& prediction, const Tensor& target);

Var sum(const Var& x);
Var mul(const Var& a, const Var& b);

}  // namespace premov::gradkit
