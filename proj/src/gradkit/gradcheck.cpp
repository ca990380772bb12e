// SPDX-License-Identifier: Apache-2.0
#include "premov/gradkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "premov/random.hpp"

namespace premov::gradkit {

GradCheckReport grad_check(const std::function<Var()>& loss_fn, const std::vector<NamedVar>& params,
                           const GradCheckOptions& options) {
  for (const auto& p : params) Var(p.var).zero_grad();
  backward(loss_fn());
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) analytic.emplace_back(p.var.grad().begin(), p.var.grad().end());

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Var v = params[pi].var;
    auto& values = v.mutable_value().values;
    std::vector<std::size_t> coords;
    if (options.max_entries_per_param == 0 || options.max_entries_per_param >= values.size()) {
      coords.resize(values.size());
      std::iota(coords.begin(), coords.end(), std::size_t{0});
    } else {
      auto order = seeded_permutation(values.size(), options.sample_seed + pi);
      coords.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(options.max_entries_per_param));
    }

    auto central = [&](std::size_t idx, double h) {
      const double saved = values[idx];
      values[idx] = saved + h;
      const double up = loss_fn().value().values[0];
      values[idx] = saved - h;
      const double down = loss_fn().value().values[0];
      values[idx] = saved;
      return (up - down) / (2.0 * h);
    };
    auto relative = [&](double a, double b) {
      return std::abs(a - b) / std::max({std::abs(a), std::abs(b), options.abs_floor});
    };

    ParamCheck check{params[pi].name, coords.size(), 0, 0.0, 0.0};
    for (std::size_t idx : coords) {
      const double numeric = central(idx, options.h);
      const double a = analytic[pi][idx];
      const double err = std::abs(a - numeric);
      const double scale = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      if (options.skip_kinks && err / scale > options.tolerance &&
          relative(numeric, central(idx, options.h / 10.0)) > options.tolerance) {
        ++check.kinks;
        continue;
      }
      check.max_abs_error = std::max(check.max_abs_error, err);
      check.max_rel_error = std::max(check.max_rel_error, err / scale);
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.checked += check.checked;
    report.kinks += check.kinks;
    report.params.push_back(std::move(check));
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

GradCheckReport grad_check(Sequential& model, const Tensor& input, const Tensor& target,
                           const GradCheckOptions& options) {
  const auto saved = model.state();
  const Var x = Var::leaf(input, false);
  auto loss_fn = [&]() {
    model.reseed_dropout(options.sample_seed ^ 0x5eedULL);
    return mse(model.forward(x, options.mode), target);
  };
  auto report = grad_check(loss_fn, model.parameters(), options);
  model.load_state(saved);
  model.zero_grad();
  return report;
}

}  // namespace premov::gradkit
