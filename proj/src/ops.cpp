// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels.hpp"
#include "partialformer/errors.hpp"

namespace pf {

using detail::make_result;
using detail::Node;

namespace {

struct MatDims {
  std::size_t batch, m, k, n;
};

// Gradient buffer of parent i, or nullptr when it does not need one.
double* parent_grad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  return p.ensure_grad().data();
}

const double* parent_data(const Node& self, std::size_t i) { return self.parents[i]->data.data(); }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

MatDims matmul_dims(const char* op, const Tensor& a, const Tensor& b, bool trans_b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  auto fail = [&]() -> MatDims {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(sa) + " and " +
                         shape_str(sb));
  };
  if (sa.size() != sb.size() || (sa.size() != 2 && sa.size() != 3)) return fail();
  const std::size_t off = sa.size() - 2;
  const std::size_t batch = off ? sa[0] : 1;
  if (off && sb[0] != sa[0]) return fail();
  const std::size_t m = sa[off], k = sa[off + 1];
  const std::size_t kb = trans_b ? sb[off + 1] : sb[off];
  const std::size_t n = trans_b ? sb[off] : sb[off + 1];
  if (k != kb) return fail();
  return {batch, m, k, n};
}

Shape matmul_shape(const Tensor& a, const MatDims& d) {
  if (a.rank() == 3) return {d.batch, d.m, d.n};
  return {d.m, d.n};
}

double apply_activation(double x, Activation kind) {
  switch (kind) {
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::sigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case Activation::tanh:
      return std::tanh(x);
    case Activation::identity:
      return x;
  }
  return x;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const MatDims d = matmul_dims("matmul", a, b, false);
  std::vector<double> out(d.batch * d.m * d.n, 0.0);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    kernels::gemm_nn(d.m, d.n, d.k, ad + bi * d.m * d.k, bd + bi * d.k * d.n, out.data() + bi * d.m * d.n);
  }
  return make_result(matmul_shape(a, d), std::move(out), {a, b}, [d](Node& self) {
    const double* g = self.grad.data();
    if (double* ga = parent_grad(self, 0)) {
      const double* bd = parent_data(self, 1);
      for (std::size_t bi = 0; bi < d.batch; ++bi) {
        kernels::gemm_nt(d.m, d.k, d.n, g + bi * d.m * d.n, bd + bi * d.k * d.n, ga + bi * d.m * d.k);
      }
    }
    if (double* gb = parent_grad(self, 1)) {
      const double* ad = parent_data(self, 0);
      for (std::size_t bi = 0; bi < d.batch; ++bi) {
        kernels::gemm_tn(d.m, d.n, d.k, ad + bi * d.m * d.k, g + bi * d.m * d.n, gb + bi * d.k * d.n);
      }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const MatDims d = matmul_dims("matmul_nt", a, b, true);
  std::vector<double> out(d.batch * d.m * d.n, 0.0);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    kernels::gemm_nt(d.m, d.n, d.k, ad + bi * d.m * d.k, bd + bi * d.n * d.k, out.data() + bi * d.m * d.n);
  }
  return make_result(matmul_shape(a, d), std::move(out), {a, b}, [d](Node& self) {
    const double* g = self.grad.data();
    if (double* ga = parent_grad(self, 0)) {
      const double* bd = parent_data(self, 1);
      for (std::size_t bi = 0; bi < d.batch; ++bi) {
        kernels::gemm_nn(d.m, d.k, d.n, g + bi * d.m * d.n, bd + bi * d.n * d.k, ga + bi * d.m * d.k);
      }
    }
    if (double* gb = parent_grad(self, 1)) {
      const double* ad = parent_data(self, 0);
      for (std::size_t bi = 0; bi < d.batch; ++bi) {
        kernels::gemm_tn(d.m, d.k, d.n, g + bi * d.m * d.n, ad + bi * d.m * d.k, gb + bi * d.n * d.k);
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose: expected a 2-D tensor, got " + shape_str(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  const double* ad = a.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
  return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    if (double* ga = parent_grad(self, 0)) {
      const double* g = self.grad.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const std::size_t n = self.grad.size();
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* gp = parent_grad(self, p)) {
        for (std::size_t i = 0; i < n; ++i) gp[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const std::size_t n = self.grad.size();
    if (double* ga = parent_grad(self, 0))
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i];
    if (double* gb = parent_grad(self, 1))
      for (std::size_t i = 0; i < n; ++i) gb[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const std::size_t n = self.grad.size();
    if (double* ga = parent_grad(self, 0)) {
      const double* bd = parent_data(self, 1);
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i] * bd[i];
    }
    if (double* gb = parent_grad(self, 1)) {
      const double* ad = parent_data(self, 0);
      for (std::size_t i = 0; i < n; ++i) gb[i] += self.grad[i] * ad[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  return make_result(a.shape(), std::move(out), {a}, [factor](Node& self) {
    if (double* ga = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += factor * self.grad[i];
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1 || x.shape().back() != bias.dim(0)) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not match last axis of " +
                         shape_str(x.shape()));
  }
  const std::size_t n = bias.dim(0);
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto bd = bias.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i % n];
  return make_result(x.shape(), std::move(out), {x, bias}, [n](Node& self) {
    const std::size_t total = self.grad.size();
    if (double* gx = parent_grad(self, 0))
      for (std::size_t i = 0; i < total; ++i) gx[i] += self.grad[i];
    if (double* gb = parent_grad(self, 1))
      for (std::size_t i = 0; i < total; ++i) gb[i % n] += self.grad[i];
  });
}

Tensor add_broadcast(const Tensor& x, const Tensor& y) {
  const Shape& sx = x.shape();
  const Shape& sy = y.shape();
  if (sy.size() > sx.size() || !std::equal(sy.rbegin(), sy.rend(), sx.rbegin())) {
    throw DimensionError("add_broadcast: " + shape_str(sy) + " is not a trailing block of " + shape_str(sx));
  }
  const std::size_t n = y.numel();
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto yd = y.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += yd[i % n];
  return make_result(sx, std::move(out), {x, y}, [n](Node& self) {
    const std::size_t total = self.grad.size();
    if (double* gx = parent_grad(self, 0))
      for (std::size_t i = 0; i < total; ++i) gx[i] += self.grad[i];
    if (double* gy = parent_grad(self, 1))
      for (std::size_t i = 0; i < total; ++i) gy[i % n] += self.grad[i];
  });
}

Tensor apply_mask(const Tensor& x, const Tensor& mask) {
  const Shape& sx = x.shape();
  const Shape& sm = mask.shape();
  if (sm.size() > sx.size() || !std::equal(sm.rbegin(), sm.rend(), sx.rbegin())) {
    throw DimensionError("apply_mask: " + shape_str(sm) + " is not a trailing block of " + shape_str(sx));
  }
  const std::size_t n = mask.numel();
  const auto md = mask.data();
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = md[i % n];
    out[i] = m <= kMaskedThreshold ? kMaskSentinel : out[i] + m;
  }
  return make_result(sx, std::move(out), {x, mask}, [n](Node& self) {
    const double* md = self.parents[1]->data.data();
    const std::size_t total = self.grad.size();
    if (double* gx = parent_grad(self, 0))
      for (std::size_t i = 0; i < total; ++i)
        if (md[i % n] > kMaskedThreshold) gx[i] += self.grad[i];
    if (double* gm = parent_grad(self, 1))
      for (std::size_t i = 0; i < total; ++i)
        if (md[i % n] > kMaskedThreshold) gm[i % n] += self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result({1}, {s}, {x}, [](Node& self) {
    if (double* gx = parent_grad(self, 0)) {
      const double g = self.grad[0];
      const std::size_t n = self.parents[0]->data.size();
      for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    }
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    if (double* gx = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor split_heads(const Tensor& x, std::size_t heads) {
  if (x.rank() != 2 || heads == 0 || x.dim(1) % heads != 0) {
    throw DimensionError("split_heads: cannot split " + shape_str(x.shape()) + " into " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t t = x.dim(0), dk = x.dim(1) / heads, width = x.dim(1);
  std::vector<double> out(x.numel());
  const double* xd = x.data().data();
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < t; ++i)
      std::copy_n(xd + i * width + h * dk, dk, out.data() + (h * t + i) * dk);
  return make_result({heads, t, dk}, std::move(out), {x}, [heads, t, dk, width](Node& self) {
    if (double* gx = parent_grad(self, 0)) {
      const double* g = self.grad.data();
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t i = 0; i < t; ++i)
          for (std::size_t c = 0; c < dk; ++c) gx[i * width + h * dk + c] += g[(h * t + i) * dk + c];
    }
  });
}

Tensor merge_heads(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("merge_heads: expected [H x T x dk], got " + shape_str(x.shape()));
  const std::size_t heads = x.dim(0), t = x.dim(1), dk = x.dim(2), width = heads * dk;
  std::vector<double> out(x.numel());
  const double* xd = x.data().data();
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < t; ++i)
      std::copy_n(xd + (h * t + i) * dk, dk, out.data() + i * width + h * dk);
  return make_result({t, width}, std::move(out), {x}, [heads, t, dk, width](Node& self) {
    if (double* gx = parent_grad(self, 0)) {
      const double* g = self.grad.data();
      for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t i = 0; i < t; ++i)
          for (std::size_t c = 0; c < dk; ++c) gx[(h * t + i) * dk + c] += g[i * width + h * dk + c];
    }
  });
}

Tensor softmax_rows(const Tensor& x, SoftmaxDiagnostics* diag) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  std::vector<double> out(x.numel(), 0.0);
  const double* xd = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd + r * n;
    double* yr = out.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (xr[j] > kMaskedThreshold) mx = std::max(mx, xr[j]);
    if (mx == -std::numeric_limits<double>::infinity()) {
      if (diag) ++diag->fully_masked_rows;
      continue;
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (xr[j] > kMaskedThreshold) {
        yr[j] = std::exp(xr[j] - mx);
        z += yr[j];
      }
    }
    const double inv = 1.0 / z;
    for (std::size_t j = 0; j < n; ++j) yr[j] *= inv;
  }
  return make_result(x.shape(), std::move(out), {x}, [n, rows](Node& self) {
    if (double* gx = parent_grad(self, 0)) {
      const double* y = self.data.data();
      const double* g = self.grad.data();
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += y[r * n + j] * g[r * n + j];
        for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
      }
    }
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  std::vector<double> out(x.numel());
  const double* xd = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd + r * n;
    const double mx = *std::max_element(xr, xr + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(xr[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xr[j] - lz;
  }
  return make_result(x.shape(), std::move(out), {x}, [n, rows](Node& self) {
    if (double* gx = parent_grad(self, 0)) {
      const double* y = self.data.data();
      const double* g = self.grad.data();
      for (std::size_t r = 0; r < rows; ++r) {
        double gs = 0.0;
        for (std::size_t j = 0; j < n; ++j) gs += g[r * n + j];
        for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += g[r * n + j] - std::exp(y[r * n + j]) * gs;
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  if (x.rank() != 2) throw DimensionError("layer_norm: expected [T x d], got " + shape_str(x.shape()));
  const std::size_t t = x.dim(0), d = x.dim(1);
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" + shape_str(bias.shape()) +
                         " do not match width of " + shape_str(x.shape()));
  }
  std::vector<double> out(t * d);
  std::vector<double> xhat(t * d);
  std::vector<double> inv_std(t);
  const double* xd = x.data().data();
  const double* gd = gain.data().data();
  const double* bd = bias.data().data();
  for (std::size_t i = 0; i < t; ++i) {
    const double* xr = xd + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (xr[j] - mu) * is;
      out[i * d + j] = xhat[i * d + j] * gd[j] + bd[j];
    }
  }
  return make_result({t, d}, std::move(out), {x, gain, bias},
                     [t, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const double* g = self.grad.data();
                       const double* gd = parent_data(self, 1);
                       if (double* gg = parent_grad(self, 1))
                         for (std::size_t i = 0; i < t * d; ++i) gg[i % d] += g[i] * xhat[i];
                       if (double* gb = parent_grad(self, 2))
                         for (std::size_t i = 0; i < t * d; ++i) gb[i % d] += g[i];
                       if (double* gx = parent_grad(self, 0)) {
                         const double inv_d = 1.0 / static_cast<double>(d);
                         for (std::size_t i = 0; i < t; ++i) {
                           double s1 = 0.0, s2 = 0.0;
                           for (std::size_t j = 0; j < d; ++j) {
                             const double dxh = g[i * d + j] * gd[j];
                             s1 += dxh;
                             s2 += dxh * xhat[i * d + j];
                           }
                           for (std::size_t j = 0; j < d; ++j) {
                             const double dxh = g[i * d + j] * gd[j];
                             gx[i * d + j] += inv_std[i] * (dxh - inv_d * s1 - xhat[i * d + j] * inv_d * s2);
                           }
                         }
                       }
                     });
}

Activation parse_activation(std::string_view tag) {
  if (tag == "relu") return Activation::relu;
  if (tag == "sigmoid") return Activation::sigmoid;
  if (tag == "tanh") return Activation::tanh;
  if (tag == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(tag) + "' (expected relu, sigmoid, tanh or identity)");
}

std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Tensor activation(const Tensor& x, Activation kind) {
  if (kind == Activation::relu) {
    if (auto* rec = ActivationPatternRecorder::active()) rec->record(x.data());
  }
  std::vector<double> out(x.numel());
  const auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply_activation(xd[i], kind);
  return make_result(x.shape(), std::move(out), {x}, [kind](Node& self) {
    double* gx = parent_grad(self, 0);
    if (!gx) return;
    const double* y = self.data.data();
    const double* g = self.grad.data();
    const std::size_t n = self.grad.size();
    switch (kind) {
      case Activation::relu:
        for (std::size_t i = 0; i < n; ++i)
          if (y[i] > 0.0) gx[i] += g[i];
        break;
      case Activation::sigmoid:
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case Activation::tanh:
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      case Activation::identity:
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i];
        break;
    }
  });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) throw DimensionError("embedding: table must be [V x d], got " + shape_str(table.shape()));
  if (ids.empty()) throw InputError("embedding: empty id sequence");
  const std::size_t v = table.dim(0), d = table.dim(1);
  std::vector<std::size_t> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      throw InputError("token id " + std::to_string(ids[i]) + " at position " + std::to_string(i) +
                       " is outside the vocabulary of size " + std::to_string(v));
    }
    rows[i] = static_cast<std::size_t>(ids[i]);
  }
  std::vector<double> out(ids.size() * d);
  const double* td = table.data().data();
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy_n(td + rows[i] * d, d, out.data() + i * d);
  return make_result({ids.size(), d}, std::move(out), {table}, [rows = std::move(rows), d](Node& self) {
    if (double* gt = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < d; ++c) gt[rows[i] * d + c] += self.grad[i * d + c];
    }
  });
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must be in [0, 1)");
  if (p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep_scale;
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    if (double* gx = parent_grad(self, 0))
      for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += self.grad[i] * mask[i];
  });
}

Tensor causal_mask(std::size_t t_q, std::size_t t_k) {
  Tensor m = Tensor::zeros({t_q, t_k});
  auto d = m.mutable_data();
  // Query i sees keys 0..i + (t_k - t_q), which covers cross-length prefixes.
  const std::size_t offset = t_k >= t_q ? t_k - t_q : 0;
  for (std::size_t i = 0; i < t_q; ++i)
    for (std::size_t j = i + offset + 1; j < t_k; ++j) d[i * t_k + j] = kMaskSentinel;
  return m;
}

}  // namespace pf
