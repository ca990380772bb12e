// SPDX-License-Identifier: Apache-2.0
#include "premov/harness/pcc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "premov/error.hpp"

namespace premov::harness {

double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(Errc::UndefinedCorrelation,
                "length mismatch " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() < 2) throw Error(Errc::UndefinedCorrelation, "need at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(Errc::UndefinedCorrelation, "zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace premov::harness
