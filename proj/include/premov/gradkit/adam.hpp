// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "premov/gradkit/layers.hpp"

namespace premov::gradkit {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;  // first moments, one buffer per parameter
  std::vector<std::vector<double>> v;  // second moments
  AdamHyper hyper;
};

/// One bias-corrected Adam update. Moment buffers are sized on the first call.
/// Throws NonFiniteGradient (before touching anything) on a NaN/inf gradient.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state);

/// Convenience overload reading each parameter's accumulated gradient.
void adam_step(const std::vector<NamedVar>& params, AdamState& state);

}  // namespace premov::gradkit
