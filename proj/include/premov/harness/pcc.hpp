// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

namespace premov::harness {

/// Centered product-moment correlation. Throws UndefinedCorrelation when the
/// lengths differ, fewer than two samples are given or either side is constant.
double pcc(std::span<const double> x, std::span<const double> y);

}  // namespace premov::harness
