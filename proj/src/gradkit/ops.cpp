// SPDX-License-Identifier: Apache-2.0
#include "premov/gradkit/ops.hpp"

#include <algorithm>
#include <cmath>

#include "premov/error.hpp"
#include "premov/kernels.hpp"
#include "premov/random.hpp"

namespace premov::gradkit {

using kernels::gemm;
using kernels::Trans;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ShapeError, what);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double>* grad_of(Node& self, std::size_t parent) {
  auto& p = self.parents[parent];
  return p->requires_grad ? &p->grad : nullptr;
}

}  // namespace

Var dense(const Var& x, const Var& w, const Var& b) {
  require(x.shape().size() == 2 && w.shape().size() == 2 && b.shape().size() == 1,
          "dense expects x[B,in], w[in,out], b[out]");
  const std::size_t batch = x.shape()[0], in = x.shape()[1], out = w.shape()[1];
  require(w.shape()[0] == in && b.shape()[0] == out,
          "dense: input " + shape_string(x.shape()) + " vs weight " + shape_string(w.shape()));

  Tensor y({batch, out});
  gemm(Trans::No, Trans::No, batch, out, in, x.value().values, w.value().values, y.values);
  const auto& bias = b.value().values;
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < out; ++j) y.values[r * out + j] += bias[j];

  return Var::from_op(std::move(y), {x, w, b}, [batch, in, out](Node& self) {
    const auto& dy = self.grad;
    const auto& xv = self.parents[0]->value.values;
    const auto& wv = self.parents[1]->value.values;
    if (auto* dx = grad_of(self, 0)) gemm(Trans::No, Trans::Yes, batch, in, out, dy, wv, *dx, true);
    if (auto* dw = grad_of(self, 1)) gemm(Trans::Yes, Trans::No, in, out, batch, xv, dy, *dw, true);
    if (auto* db = grad_of(self, 2))
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t j = 0; j < out; ++j) (*db)[j] += dy[r * out + j];
  });
}

Var relu(const Var& x) {
  Tensor y = x.value();
  for (double& v : y.values) v = v > 0.0 ? v : 0.0;
  return Var::from_op(std::move(y), {x}, [](Node& self) {
    auto* dx = grad_of(self, 0);
    if (!dx) return;
    const auto& yv = self.value.values;
    for (std::size_t i = 0; i < yv.size(); ++i)
      if (yv[i] > 0.0) (*dx)[i] += self.grad[i];
  });
}

Var conv1d_same(const Var& x, const Var& w, const Var& b) {
  require(x.shape().size() == 3 && w.shape().size() == 3 && b.shape().size() == 1,
          "conv1d expects x[B,T,Cin], w[K,Cin,Cout], b[Cout]");
  const std::size_t batch = x.shape()[0], steps = x.shape()[1], cin = x.shape()[2];
  const std::size_t kernel = w.shape()[0], cout = w.shape()[2];
  require(w.shape()[1] == cin && b.shape()[0] == cout,
          "conv1d: input " + shape_string(x.shape()) + " vs kernel " + shape_string(w.shape()));
  const std::size_t pad_left = (kernel - 1) / 2;
  const std::size_t patch = kernel * cin;

  // im2col: one row per (b, t) holding the zero-padded receptive field.
  auto cols = std::make_shared<std::vector<double>>(batch * steps * patch, 0.0);
  const auto& xv = x.value().values;
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t t = 0; t < steps; ++t) {
      double* row = cols->data() + (bi * steps + t) * patch;
      for (std::size_t k = 0; k < kernel; ++k) {
        const auto src = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad_left);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
        std::copy_n(xv.data() + (bi * steps + static_cast<std::size_t>(src)) * cin, cin, row + k * cin);
      }
    }

  Tensor y({batch, steps, cout});
  gemm(Trans::No, Trans::No, batch * steps, cout, patch, *cols, w.value().values, y.values);
  const auto& bias = b.value().values;
  for (std::size_t r = 0; r < batch * steps; ++r)
    for (std::size_t j = 0; j < cout; ++j) y.values[r * cout + j] += bias[j];

  return Var::from_op(std::move(y), {x, w, b},
                      [cols, batch, steps, cin, cout, kernel, pad_left, patch](Node& self) {
    const auto& dy = self.grad;
    const std::size_t rows = batch * steps;
    if (auto* dw = grad_of(self, 1)) gemm(Trans::Yes, Trans::No, patch, cout, rows, *cols, dy, *dw, true);
    if (auto* db = grad_of(self, 2))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cout; ++j) (*db)[j] += dy[r * cout + j];
    if (auto* dx = grad_of(self, 0)) {
      std::vector<double> dcols(rows * patch);
      gemm(Trans::No, Trans::Yes, rows, patch, cout, dy, self.parents[1]->value.values, dcols);
      for (std::size_t bi = 0; bi < batch; ++bi)
        for (std::size_t t = 0; t < steps; ++t) {
          const double* row = dcols.data() + (bi * steps + t) * patch;
          for (std::size_t k = 0; k < kernel; ++k) {
            const auto src = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad_left);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(steps)) continue;
            double* dst = dx->data() + (bi * steps + static_cast<std::size_t>(src)) * cin;
            for (std::size_t c = 0; c < cin; ++c) dst[c] += row[k * cin + c];
          }
        }
    }
  });
}

Var maxpool1d(const Var& x, std::size_t window) {
  require(x.shape().size() == 3 && window > 0, "maxpool1d expects x[B,T,C] and window > 0");
  const std::size_t batch = x.shape()[0], steps = x.shape()[1], ch = x.shape()[2];
  const std::size_t out_steps = steps / window;
  require(out_steps > 0, "maxpool1d window " + std::to_string(window) + " longer than sequence " +
                             std::to_string(steps));

  Tensor y({batch, out_steps, ch});
  auto argmax = std::make_shared<std::vector<std::size_t>>(y.numel());
  const auto& xv = x.value().values;
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t o = 0; o < out_steps; ++o)
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best = (bi * steps + o * window) * ch + c;
        for (std::size_t k = 1; k < window; ++k) {
          const std::size_t idx = (bi * steps + o * window + k) * ch + c;
          if (xv[idx] > xv[best]) best = idx;
        }
        const std::size_t out_idx = (bi * out_steps + o) * ch + c;
        y.values[out_idx] = xv[best];
        (*argmax)[out_idx] = best;
      }

  return Var::from_op(std::move(y), {x}, [argmax](Node& self) {
    auto* dx = grad_of(self, 0);
    if (!dx) return;
    for (std::size_t i = 0; i < argmax->size(); ++i) (*dx)[(*argmax)[i]] += self.grad[i];
  });
}

Var batchnorm_train(const Var& x, const Var& gamma, const Var& beta, double epsilon, BatchStats* stats_out) {
  require(!x.shape().empty(), "batchnorm needs a feature axis");
  const std::size_t features = x.shape().back();
  require(gamma.numel() == features && beta.numel() == features,
          "batchnorm: " + std::to_string(features) + " features vs " + std::to_string(gamma.numel()) + " scales");
  const std::size_t rows = x.numel() / features;
  require(rows > 0, "batchnorm on an empty batch");
  const auto& xv = x.value().values;

  std::vector<double> mean(features, 0.0), var(features, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t f = 0; f < features; ++f) mean[f] += xv[r * features + f];
  for (double& m : mean) m /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t f = 0; f < features; ++f) {
      const double d = xv[r * features + f] - mean[f];
      var[f] += d * d;
    }
  for (double& v : var) v /= static_cast<double>(rows);

  auto inv_std = std::make_shared<std::vector<double>>(features);
  for (std::size_t f = 0; f < features; ++f) (*inv_std)[f] = 1.0 / std::sqrt(var[f] + epsilon);
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  Tensor y(x.shape());
  const auto& g = gamma.value().values;
  const auto& bt = beta.value().values;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t f = 0; f < features; ++f) {
      const std::size_t i = r * features + f;
      (*xhat)[i] = (xv[i] - mean[f]) * (*inv_std)[f];
      y.values[i] = g[f] * (*xhat)[i] + bt[f];
    }
  if (stats_out) *stats_out = {std::move(mean), std::move(var)};

  return Var::from_op(std::move(y), {x, gamma, beta}, [xhat, inv_std, rows, features](Node& self) {
    const auto& dy = self.grad;
    const auto& g = self.parents[1]->value.values;
    std::vector<double> sum_dy(features, 0.0), sum_dy_xhat(features, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t f = 0; f < features; ++f) {
        const std::size_t i = r * features + f;
        sum_dy[f] += dy[i];
        sum_dy_xhat[f] += dy[i] * (*xhat)[i];
      }
    if (auto* dg = grad_of(self, 1))
      for (std::size_t f = 0; f < features; ++f) (*dg)[f] += sum_dy_xhat[f];
    if (auto* db = grad_of(self, 2))
      for (std::size_t f = 0; f < features; ++f) (*db)[f] += sum_dy[f];
    if (auto* dx = grad_of(self, 0)) {
      const auto n = static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t f = 0; f < features; ++f) {
          const std::size_t i = r * features + f;
          (*dx)[i] += g[f] * (*inv_std)[f] / n * (n * dy[i] - sum_dy[f] - (*xhat)[i] * sum_dy_xhat[f]);
        }
    }
  });
}

Var batchnorm_eval(const Var& x, const Var& gamma, const Var& beta, std::span<const double> mean,
                   std::span<const double> var, double epsilon) {
  require(!x.shape().empty(), "batchnorm needs a feature axis");
  const std::size_t features = x.shape().back();
  require(gamma.numel() == features && beta.numel() == features && mean.size() == features &&
              var.size() == features,
          "batchnorm: feature count mismatch");
  const std::size_t rows = x.numel() / features;
  auto scale = std::make_shared<std::vector<double>>(features);
  for (std::size_t f = 0; f < features; ++f) (*scale)[f] = 1.0 / std::sqrt(var[f] + epsilon);
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  Tensor y(x.shape());
  const auto& xv = x.value().values;
  const auto& g = gamma.value().values;
  const auto& bt = beta.value().values;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t f = 0; f < features; ++f) {
      const std::size_t i = r * features + f;
      (*xhat)[i] = (xv[i] - mean[f]) * (*scale)[f];
      y.values[i] = g[f] * (*xhat)[i] + bt[f];
    }
  return Var::from_op(std::move(y), {x, gamma, beta}, [xhat, scale, rows, features](Node& self) {
    const auto& dy = self.grad;
    const auto& g = self.parents[1]->value.values;
    auto* dx = grad_of(self, 0);
    auto* dg = grad_of(self, 1);
    auto* db = grad_of(self, 2);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t f = 0; f < features; ++f) {
        const std::size_t i = r * features + f;
        if (dx) (*dx)[i] += dy[i] * g[f] * (*scale)[f];
        if (dg) (*dg)[f] += dy[i] * (*xhat)[i];
        if (db) (*db)[f] += dy[i];
      }
  });
}

Var dropout(const Var& x, double rate, std::mt19937_64& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout rate must lie in [0, 1)");
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  Tensor y = x.value();
  for (std::size_t i = 0; i < y.numel(); ++i) {
    const double u = uniform01(rng);
    (*mask)[i] = u < rate ? 0.0 : keep_scale;
    y.values[i] *= (*mask)[i];
  }
  return Var::from_op(std::move(y), {x}, [mask](Node& self) {
    auto* dx = grad_of(self, 0);
    if (!dx) return;
    for (std::size_t i = 0; i < mask->size(); ++i) (*dx)[i] += self.grad[i] * (*mask)[i];
  });
}

Var lstm_last(const Var& x, const Var& w_x, const Var& w_h, const Var& b) {
  require(x.shape().size() == 3 && w_x.shape().size() == 2 && w_h.shape().size() == 2 && b.shape().size() == 1,
          "lstm expects x[B,T,I], w_x[I,4H], w_h[H,4H], b[4H]");
  const std::size_t batch = x.shape()[0], steps = x.shape()[1], in = x.shape()[2];
  const std::size_t hidden = w_h.shape()[0];
  const std::size_t g4 = 4 * hidden;
  require(steps > 0, "lstm needs at least one time step");
  require(w_x.shape()[0] == in && w_x.shape()[1] == g4 && w_h.shape()[1] == g4 && b.shape()[0] == g4,
          "lstm: input " + shape_string(x.shape()) + " vs weights " + shape_string(w_x.shape()) + ", " +
              shape_string(w_h.shape()));

  // Per step and sample: activated gates [i, f, g, o], cell state, and tanh(cell).
  auto gates = std::make_shared<std::vector<double>>(steps * batch * g4);
  auto cells = std::make_shared<std::vector<double>>((steps + 1) * batch * hidden, 0.0);
  auto hiddens = std::make_shared<std::vector<double>>((steps + 1) * batch * hidden, 0.0);
  auto tanh_c = std::make_shared<std::vector<double>>(steps * batch * hidden);

  // Input projection for every (b, t) row at once.
  std::vector<double> xproj(batch * steps * g4);
  gemm(Trans::No, Trans::No, batch * steps, g4, in, x.value().values, w_x.value().values, xproj);
  const auto& bias = b.value().values;
  const auto& wh = w_h.value().values;
  std::vector<double> z(batch * g4);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* h_prev = hiddens->data() + t * batch * hidden;
    gemm(Trans::No, Trans::No, batch, g4, hidden, {h_prev, batch * hidden}, wh, z);
    double* gt = gates->data() + t * batch * g4;
    const double* c_prev = cells->data() + t * batch * hidden;
    double* c_next = cells->data() + (t + 1) * batch * hidden;
    double* h_next = hiddens->data() + (t + 1) * batch * hidden;
    double* tc = tanh_c->data() + t * batch * hidden;
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xp = xproj.data() + (bi * steps + t) * g4;
      const double* zr = z.data() + bi * g4;
      double* gr = gt + bi * g4;
      for (std::size_t j = 0; j < hidden; ++j) {
        const double ig = sigmoid(zr[j] + xp[j] + bias[j]);
        const double fg = sigmoid(zr[hidden + j] + xp[hidden + j] + bias[hidden + j]);
        const double cg = std::tanh(zr[2 * hidden + j] + xp[2 * hidden + j] + bias[2 * hidden + j]);
        const double og = sigmoid(zr[3 * hidden + j] + xp[3 * hidden + j] + bias[3 * hidden + j]);
        gr[j] = ig;
        gr[hidden + j] = fg;
        gr[2 * hidden + j] = cg;
        gr[3 * hidden + j] = og;
        const double c = fg * c_prev[bi * hidden + j] + ig * cg;
        c_next[bi * hidden + j] = c;
        tc[bi * hidden + j] = std::tanh(c);
        h_next[bi * hidden + j] = og * tc[bi * hidden + j];
      }
    }
  }

  Tensor y({batch, hidden});
  std::copy_n(hiddens->data() + steps * batch * hidden, batch * hidden, y.values.begin());

  return Var::from_op(std::move(y), {x, w_x, w_h, b},
                      [gates, cells, hiddens, tanh_c, batch, steps, in, hidden, g4](Node& self) {
    const auto& xv = self.parents[0]->value.values;
    const auto& wx = self.parents[1]->value.values;
    const auto& wh = self.parents[2]->value.values;
    auto* dx = grad_of(self, 0);
    auto* dwx = grad_of(self, 1);
    auto* dwh = grad_of(self, 2);
    auto* db = grad_of(self, 3);

    std::vector<double> dh(self.grad.begin(), self.grad.end());
    std::vector<double> dc(batch * hidden, 0.0);
    std::vector<double> dz(batch * g4);
    std::vector<double> dz_all(batch * steps * g4);  // rows (b, t) to match x
    for (std::size_t t = steps; t-- > 0;) {
      const double* gt = gates->data() + t * batch * g4;
      const double* c_prev = cells->data() + t * batch * hidden;
      const double* tc = tanh_c->data() + t * batch * hidden;
      for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* gr = gt + bi * g4;
        double* dzr = dz.data() + bi * g4;
        for (std::size_t j = 0; j < hidden; ++j) {
          const std::size_t k = bi * hidden + j;
          const double ig = gr[j], fg = gr[hidden + j], cg = gr[2 * hidden + j], og = gr[3 * hidden + j];
          const double dout = dh[k] * tc[k];
          const double dcell = dc[k] + dh[k] * og * (1.0 - tc[k] * tc[k]);
          dzr[j] = dcell * cg * ig * (1.0 - ig);
          dzr[hidden + j] = dcell * c_prev[k] * fg * (1.0 - fg);
          dzr[2 * hidden + j] = dcell * ig * (1.0 - cg * cg);
          dzr[3 * hidden + j] = dout * og * (1.0 - og);
          dc[k] = dcell * fg;
        }
        std::copy_n(dzr, g4, dz_all.data() + (bi * steps + t) * g4);
      }
      const double* h_prev = hiddens->data() + t * batch * hidden;
      if (dwh) gemm(Trans::Yes, Trans::No, hidden, g4, batch, {h_prev, batch * hidden}, dz, *dwh, true);
      if (db)
        for (std::size_t bi = 0; bi < batch; ++bi)
          for (std::size_t j = 0; j < g4; ++j) (*db)[j] += dz[bi * g4 + j];
      if (t > 0) gemm(Trans::No, Trans::Yes, batch, hidden, g4, dz, wh, dh);
    }
    if (dwx) gemm(Trans::Yes, Trans::No, in, g4, batch * steps, xv, dz_all, *dwx, true);
    if (dx) gemm(Trans::No, Trans::Yes, batch * steps, in, g4, dz_all, wx, *dx, true);
  });
}

Var mse(const Var& prediction, const Tensor& target) {
  require(prediction.shape() == target.shape,
          "mse: prediction " + shape_string(prediction.shape()) + " vs target " + shape_string(target.shape));
  const std::size_t n = target.numel();
  require(n > 0, "mse of an empty tensor");
  double acc = 0.0;
  const auto& p = prediction.value().values;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = p[i] - target.values[i];
    acc += d * d;
  }
  auto tgt = std::make_shared<std::vector<double>>(target.values);
  return Var::from_op(Tensor({1}, {acc / static_cast<double>(n)}), {prediction}, [tgt, n](Node& self) {
    auto* dp = grad_of(self, 0);
    if (!dp) return;
    const auto& pv = self.parents[0]->value.values;
    const double scale = 2.0 * self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) (*dp)[i] += scale * (pv[i] - (*tgt)[i]);
  });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().values) acc += v;
  return Var::from_op(Tensor({1}, {acc}), {x}, [](Node& self) {
    auto* dx = grad_of(self, 0);
    if (!dx) return;
    for (double& g : *dx) g += self.grad[0];
  });
}

Var mul(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.numel(); ++i) y.values[i] *= b.value().values[i];
  return Var::from_op(std::move(y), {a, b}, [](Node& self) {
    const auto& av = self.parents[0]->value.values;
    const auto& bv = self.parents[1]->value.values;
    if (auto* da = grad_of(self, 0))
      for (std::size_t i = 0; i < av.size(); ++i) (*da)[i] += self.grad[i] * bv[i];
    if (auto* db = grad_of(self, 1))
      for (std::size_t i = 0; i < bv.size(); ++i) (*db)[i] += self.grad[i] * av[i];
  });
}

}  // namespace premov::gradkit
