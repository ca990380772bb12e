// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "premov/gradkit/model.hpp"

namespace premov::gradkit {

struct GradCheckOptions {
  double h = 1e-5;            // central-difference step
  double tolerance = 1e-4;    // max relative error to pass
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, abs_floor).
  double abs_floor = 1e-6;
  // Coordinates checked per parameter tensor; 0 checks all of them.
  std::size_t max_entries_per_param = 0;
  std::uint64_t sample_seed = 0;
  Mode mode = Mode::Train;
  // A failing coordinate whose central difference moves by more than the
  // tolerance when the step shrinks to h/10 straddles a ReLU or max-pool kink;
  // it is counted in `kinks` and left out of the error statistics.
  bool skip_kinks = false;
};

struct ParamCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t kinks = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;
  bool passed = false;
};

/// Compares backward() through `loss_fn` against central differences of the
/// same function for every listed parameter. `loss_fn` must be deterministic.
GradCheckReport grad_check(const std::function<Var()>& loss_fn, const std::vector<NamedVar>& params,
                           const GradCheckOptions& options = {});

/// MSE of the model output against `target`. Dropout masks are re-drawn from
/// a fixed seed on every evaluation and the model state is restored afterwards.
GradCheckReport grad_check(Sequential& model, const Tensor& input, const Tensor& target,
                           const GradCheckOptions& options = {});

}  // namespace premov::gradkit
