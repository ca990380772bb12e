// SPDX-License-Identifier: Apache-2.0
#include "premov/gradkit/adam.hpp"

#include <cmath>

#include "premov/error.hpp"

namespace premov::gradkit {

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state) {
  if (params.size() != grads.size()) throw Error(Errc::ShapeError, "adam: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size())
      throw Error(Errc::ShapeError, "adam: gradient " + std::to_string(i) + " has the wrong size");
    for (double g : grads[i])
      if (!std::isfinite(g)) throw Error(Errc::NonFiniteGradient, "gradient " + std::to_string(i) + " is not finite");
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw Error(Errc::ShapeError, "adam: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (state.m[i].size() != params[i].size() || state.v[i].size() != params[i].size())
      throw Error(Errc::ShapeError, "adam: moment buffer " + std::to_string(i) + " has the wrong size");

  const auto& h = state.hyper;
  ++state.step;
  const double correction1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= h.lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

void adam_step(const std::vector<NamedVar>& params, AdamState& state) {
  std::vector<std::span<double>> values;
  std::vector<std::span<const double>> grads;
  values.reserve(params.size());
  grads.reserve(params.size());
  for (const auto& p : params) {
    Var v = p.var;
    values.emplace_back(v.mutable_value().values);
    grads.emplace_back(v.mutable_grad());
  }
  adam_step(values, grads, state);
}

}  // namespace premov::gradkit
