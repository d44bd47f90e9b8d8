// Copyright 2026 The evderain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "evderain/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "evderain/autodiff/fft.hpp"
#include "evderain/errors.hpp"

namespace evderain::ad {

namespace {

void check_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void check_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(a.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Elementwise unary op with derivative given from (input, output).
template <typename F, typename D>
Tensor unary(const char* name, const Tensor& a, F f, D dfdx) {
  const auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return make_result(name, a.shape(), std::move(y), {a}, [dfdx](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same(a, b, "add");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  return make_result("add", a.shape(), std::move(y), {a, b}, [](Node& self) {
    accumulate_grad(*self.inputs[0], self.grad);
    accumulate_grad(*self.inputs[1], self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same(a, b, "sub");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
  return make_result("sub", a.shape(), std::move(y), {a, b}, [](Node& self) {
    accumulate_grad(*self.inputs[0], self.grad);
    Node& rhs = *self.inputs[1];
    if (!rhs.requires_grad) return;
    auto& g = rhs.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same(a, b, "mul");
  std::vector<double> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  return make_result("mul", a.shape(), std::move(y), {a, b}, [](Node& self) {
    Node& lhs = *self.inputs[0];
    Node& rhs = *self.inputs[1];
    if (lhs.requires_grad) {
      auto& g = lhs.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * rhs.value[i];
    }
    if (rhs.requires_grad) {
      auto& g = rhs.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * lhs.value[i];
    }
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary("add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary("mul_scalar", a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor exp(const Tensor& a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& a) {
  return unary(
      "silu", a, [](double x) { return x * stable_sigmoid(x); },
      [](double x, double) {
        const double s = stable_sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Tensor softplus(const Tensor& a) {
  return unary(
      "softplus", a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return stable_sigmoid(x); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  std::vector<double> y(m * n, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &y[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* brow = &B[p * n];
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(y), {a, b}, [m, k, n](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    const auto& dy = self.grad;
    if (na.requires_grad) {
      auto& ga = na.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += dy[i * n + j] * nb.value[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (nb.requires_grad) {
      auto& gb = nb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = na.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * dy[i * n + j];
        }
    }
  });
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  check_rank(input, 2, "linear");
  check_rank(weight, 2, "linear");
  const std::size_t out = weight.dim(0), in = weight.dim(1), n = input.dim(1);
  if (input.dim(0) != in) {
    throw ShapeError("linear: weight " + shape_string(weight.shape()) + " vs input " +
                     shape_string(input.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.size() != out) {
    throw ShapeError("linear: bias " + shape_string(bias.shape()) + " vs weight " + shape_string(weight.shape()));
  }
  std::vector<double> y(out * n, 0.0);
  const auto W = weight.data();
  const auto X = input.data();
  for (std::size_t o = 0; o < out; ++o) {
    double* row = &y[o * n];
    if (has_bias) std::fill(row, row + n, bias[o]);
    for (std::size_t c = 0; c < in; ++c) {
      const double w = W[o * in + c];
      const double* xrow = &X[c * n];
      for (std::size_t j = 0; j < n; ++j) row[j] += w * xrow[j];
    }
  }
  std::vector<Tensor> inputs{input, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result("linear", {out, n}, std::move(y), std::move(inputs), [out, in, n, has_bias](Node& self) {
    Node& nx = *self.inputs[0];
    Node& nw = *self.inputs[1];
    const auto& dy = self.grad;
    if (nx.requires_grad) {
      auto& gx = nx.ensure_grad();
      for (std::size_t o = 0; o < out; ++o)
        for (std::size_t c = 0; c < in; ++c) {
          const double w = nw.value[o * in + c];
          const double* drow = &dy[o * n];
          double* grow = &gx[c * n];
          for (std::size_t j = 0; j < n; ++j) grow[j] += w * drow[j];
        }
    }
    if (nw.requires_grad) {
      auto& gw = nw.ensure_grad();
      for (std::size_t o = 0; o < out; ++o)
        for (std::size_t c = 0; c < in; ++c) {
          const double* drow = &dy[o * n];
          const double* xrow = &nx.value[c * n];
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += drow[j] * xrow[j];
          gw[o * in + c] += acc;
        }
    }
    if (has_bias && self.inputs[2]->requires_grad) {
      auto& gb = self.inputs[2]->ensure_grad();
      for (std::size_t o = 0; o < out; ++o) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += dy[o * n + j];
        gb[o] += acc;
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  check_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> y(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[j * r + i] = a[i * c + j];
  return make_result("transpose", {c, r}, std::move(y), {a}, [r, c](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, bool depthwise) {
  check_rank(input, 2, "conv1d");
  const std::size_t cin = input.dim(0), len = input.dim(1);
  std::size_t cout = 0, k = 0;
  if (depthwise) {
    check_rank(weight, 2, "conv1d");
    cout = weight.dim(0);
    k = weight.dim(1);
    if (cout != cin) {
      throw ShapeError("conv1d: depthwise weight " + shape_string(weight.shape()) + " vs input " +
                       shape_string(input.shape()));
    }
  } else {
    check_rank(weight, 3, "conv1d");
    cout = weight.dim(0);
    k = weight.dim(2);
    if (weight.dim(1) != cin) {
      throw ShapeError("conv1d: weight " + shape_string(weight.shape()) + " vs input " +
                       shape_string(input.shape()));
    }
  }
  if (k % 2 == 0) throw ShapeError("conv1d: kernel length must be odd, got " + std::to_string(k));
  const bool has_bias = bias.defined();
  if (has_bias && bias.size() != cout) {
    throw ShapeError("conv1d: bias " + shape_string(bias.shape()) + " vs " + std::to_string(cout) + " channels");
  }
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto L = static_cast<std::ptrdiff_t>(len);
  // Visits every (out channel, in channel, tap) with the valid output range.
  auto for_taps = [=](auto&& body) {
    for (std::size_t o = 0; o < cout; ++o) {
      const std::size_t c_begin = depthwise ? o : 0;
      const std::size_t c_end = depthwise ? o + 1 : cin;
      for (std::size_t c = c_begin; c < c_end; ++c) {
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
          const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
          const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(L, L - shift);
          const std::size_t widx = depthwise ? o * k + j : (o * cin + c) * k + j;
          body(o, c, widx, shift, lo, hi);
        }
      }
    }
  };
  std::vector<double> y(cout * len, 0.0);
  const auto X = input.data();
  const auto W = weight.data();
  if (has_bias) {
    for (std::size_t o = 0; o < cout; ++o) std::fill(&y[o * len], &y[o * len] + len, bias[o]);
  }
  for_taps([&](std::size_t o, std::size_t c, std::size_t widx, std::ptrdiff_t shift, std::ptrdiff_t lo,
               std::ptrdiff_t hi) {
    const double w = W[widx];
    double* yrow = &y[o * len];
    const double* xrow = &X[c * len];
    for (std::ptrdiff_t l = lo; l < hi; ++l) yrow[l] += w * xrow[l + shift];
  });
  std::vector<Tensor> inputs{input, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result("conv1d", {cout, len}, std::move(y), std::move(inputs),
                     [for_taps, cout, len, has_bias](Node& self) {
                       Node& nx = *self.inputs[0];
                       Node& nw = *self.inputs[1];
                       const auto& dy = self.grad;
                       double* gx = nx.requires_grad ? nx.ensure_grad().data() : nullptr;
                       double* gw = nw.requires_grad ? nw.ensure_grad().data() : nullptr;
                       for_taps([&](std::size_t o, std::size_t c, std::size_t widx, std::ptrdiff_t shift,
                                    std::ptrdiff_t lo, std::ptrdiff_t hi) {
                         const double* drow = &dy[o * len];
                         if (gx) {
                           const double w = nw.value[widx];
                           double* grow = gx + c * len;
                           for (std::ptrdiff_t l = lo; l < hi; ++l) grow[l + shift] += w * drow[l];
                         }
                         if (gw) {
                           const double* xrow = &nx.value[c * len];
                           double acc = 0.0;
                           for (std::ptrdiff_t l = lo; l < hi; ++l) acc += drow[l] * xrow[l + shift];
                           gw[widx] += acc;
                         }
                       });
                       if (has_bias && self.inputs[2]->requires_grad) {
                         auto& gb = self.inputs[2]->ensure_grad();
                         for (std::size_t o = 0; o < cout; ++o) {
                           double acc = 0.0;
                           for (std::size_t l = 0; l < len; ++l) acc += dy[o * len + l];
                           gb[o] += acc;
                         }
                       }
                     });
}

Tensor batchnorm1d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                   Mode mode) {
  check_rank(input, 2, "batchnorm1d");
  const std::size_t C = input.dim(0), L = input.dim(1);
  if (gamma.size() != C || beta.size() != C || stats.running_mean.size() != C || stats.running_var.size() != C) {
    throw ShapeError("batchnorm1d: parameters do not match " + std::to_string(C) + " channels of " +
                     shape_string(input.shape()));
  }
  if (L == 0) throw ShapeError("batchnorm1d: empty input");
  const auto X = input.data();
  std::vector<double> mu(C), sd(C), inv_std(C);
  if (mode == Mode::train) {
    auto rm = stats.running_mean.mutable_data();
    auto rv = stats.running_var.mutable_data();
    for (std::size_t c = 0; c < C; ++c) {
      double m = 0.0;
      for (std::size_t l = 0; l < L; ++l) m += X[c * L + l];
      m /= static_cast<double>(L);
      double v = 0.0;
      for (std::size_t l = 0; l < L; ++l) v += (X[c * L + l] - m) * (X[c * L + l] - m);
      const double unbiased = L > 1 ? v / static_cast<double>(L - 1) : 0.0;
      v /= static_cast<double>(L);
      mu[c] = m;
      sd[c] = std::sqrt(v + stats.eps);
      inv_std[c] = 1.0 / sd[c];
      rm[c] = (1.0 - stats.momentum) * rm[c] + stats.momentum * m;
      rv[c] = (1.0 - stats.momentum) * rv[c] + stats.momentum * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mu[c] = stats.running_mean[c];
      sd[c] = std::sqrt(stats.running_var[c] + stats.eps);
      inv_std[c] = 1.0 / sd[c];
    }
  }
  std::vector<double> xhat(C * L), y(C * L);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t l = 0; l < L; ++l) {
      const double centered = X[c * L + l] - mu[c];
      xhat[c * L + l] = centered / sd[c];
      y[c * L + l] = gamma[c] * centered / sd[c] + beta[c];
    }
  }
  const bool batch_stats = mode == Mode::train;
  return make_result("batchnorm1d", input.shape(), std::move(y), {input, gamma, beta},
                     [C, L, xhat = std::move(xhat), inv_std = std::move(inv_std), batch_stats](Node& self) {
                       Node& nx = *self.inputs[0];
                       Node& ng = *self.inputs[1];
                       Node& nb = *self.inputs[2];
                       const auto& dy = self.grad;
                       for (std::size_t c = 0; c < C; ++c) {
                         double sum_dy = 0.0, sum_dy_xhat = 0.0;
                         for (std::size_t l = 0; l < L; ++l) {
                           sum_dy += dy[c * L + l];
                           sum_dy_xhat += dy[c * L + l] * xhat[c * L + l];
                         }
                         if (ng.requires_grad) ng.ensure_grad()[c] += sum_dy_xhat;
                         if (nb.requires_grad) nb.ensure_grad()[c] += sum_dy;
                         if (!nx.requires_grad) continue;
                         auto& gx = nx.ensure_grad();
                         const double scale = ng.value[c] * inv_std[c];
                         if (batch_stats) {
                           const double mean_dy = sum_dy / static_cast<double>(L);
                           const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(L);
                           for (std::size_t l = 0; l < L; ++l) {
                             gx[c * L + l] += scale * (dy[c * L + l] - mean_dy - xhat[c * L + l] * mean_dy_xhat);
                           }
                         } else {
                           for (std::size_t l = 0; l < L; ++l) gx[c * L + l] += scale * dy[c * L + l];
                         }
                       }
                     });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  const auto& shape = a.shape();
  if (axis >= shape.size()) throw ShapeError("softmax: axis out of range for " + shape_string(shape));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t n = shape[axis];
  std::vector<double> y(a.size());
  const auto X = a.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, X[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(X[base + j * inner] - mx);
        y[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < n; ++j) y[base + j * inner] /= z;
    }
  }
  return make_result("softmax", shape, std::move(y), {a}, [outer, inner, n](Node& self) {
    Node& in_node = *self.inputs[0];
    if (!in_node.requires_grad) return;
    auto& g = in_node.ensure_grad();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += self.grad[base + j * inner] * self.value[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = base + j * inner;
          g[idx] += self.value[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

Tensor gather_cols(const Tensor& table, std::span<const std::size_t> indices) {
  check_rank(table, 2, "gather_cols");
  const std::size_t C = table.dim(0), V = table.dim(1), N = indices.size();
  for (auto idx : indices) {
    if (idx >= V) {
      throw RangeError("gather_cols: index " + std::to_string(idx) + " outside table of " + std::to_string(V) +
                       " columns");
    }
  }
  std::vector<double> y(C * N);
  const auto T = table.data();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < N; ++n) y[c * N + n] = T[c * V + indices[n]];
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result("gather_cols", {C, N}, std::move(y), {table}, [C, V, N, idx = std::move(idx)](Node& self) {
    Node& nt = *self.inputs[0];
    if (!nt.requires_grad) return;
    auto& g = nt.ensure_grad();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t n = 0; n < N; ++n) g[c * V + idx[n]] += self.grad[c * N + n];
  });
}

Tensor segment_mean(const Tensor& input, std::span<const std::size_t> segment, std::size_t num_segments) {
  check_rank(input, 2, "segment_mean");
  const std::size_t C = input.dim(0), N = input.dim(1), G = num_segments;
  if (segment.size() != N) {
    throw ShapeError("segment_mean: " + std::to_string(segment.size()) + " segment ids for input " +
                     shape_string(input.shape()));
  }
  std::vector<double> count(G, 0.0);
  for (auto s : segment) {
    if (s >= G) throw RangeError("segment_mean: segment id " + std::to_string(s) + " >= " + std::to_string(G));
    count[s] += 1.0;
  }
  std::vector<double> y(C * G, 0.0);
  const auto X = input.data();
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t n = 0; n < N; ++n) y[c * G + segment[n]] += X[c * N + n];
    for (std::size_t g = 0; g < G; ++g) {
      if (count[g] > 0.0) y[c * G + g] /= count[g];
    }
  }
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return make_result("segment_mean", {C, G}, std::move(y), {input},
                     [C, N, G, seg = std::move(seg), count = std::move(count)](Node& self) {
                       Node& nx = *self.inputs[0];
                       if (!nx.requires_grad) return;
                       auto& g = nx.ensure_grad();
                       for (std::size_t c = 0; c < C; ++c)
                         for (std::size_t n = 0; n < N; ++n) g[c * N + n] += self.grad[c * G + seg[n]] / count[seg[n]];
                     });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  for (const auto& p : parts) check_rank(p, 2, "concat");
  const std::size_t other = parts[0].dim(1 - axis);
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.dim(1 - axis) != other) {
      throw ShapeError("concat: shape mismatch " + shape_string(parts[0].shape()) + " vs " +
                       shape_string(p.shape()));
    }
    total += p.dim(axis);
  }
  const Shape shape = axis == 0 ? Shape{total, other} : Shape{other, total};
  std::vector<double> y(total * other);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t rows = p.dim(0), cols = p.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t dst = axis == 0 ? (offset + r) * other + c : r * total + offset + c;
        y[dst] = p[r * cols + c];
      }
    offset += p.dim(axis);
  }
  return make_result("concat", shape, std::move(y), std::vector<Tensor>(parts.begin(), parts.end()),
                     [axis, total, other, offsets = std::move(offsets)](Node& self) {
                       for (std::size_t i = 0; i < self.inputs.size(); ++i) {
                         Node& in = *self.inputs[i];
                         if (!in.requires_grad) continue;
                         auto& g = in.ensure_grad();
                         const std::size_t rows = in.shape[0], cols = in.shape[1];
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c) {
                             const std::size_t src =
                                 axis == 0 ? (offsets[i] + r) * other + c : r * total + offsets[i] + c;
                             g[r * cols + c] += self.grad[src];
                           }
                       }
                     });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  if (a.rank() == 1 && axis == 0) {
    if (begin > end || end > a.size()) throw ShapeError("slice: bad range for " + shape_string(a.shape()));
    std::vector<double> y(a.data().begin() + static_cast<std::ptrdiff_t>(begin),
                          a.data().begin() + static_cast<std::ptrdiff_t>(end));
    return make_result("slice", {end - begin}, std::move(y), {a}, [begin](Node& self) {
      Node& in = *self.inputs[0];
      if (!in.requires_grad) return;
      auto& g = in.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin + i] += self.grad[i];
    });
  }
  check_rank(a, 2, "slice");
  if (axis > 1 || begin > end || end > a.dim(axis)) {
    throw ShapeError("slice: bad range [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " of " + shape_string(a.shape()));
  }
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  const std::size_t out_rows = axis == 0 ? end - begin : rows;
  const std::size_t out_cols = axis == 1 ? end - begin : cols;
  const std::size_t r0 = axis == 0 ? begin : 0;
  const std::size_t c0 = axis == 1 ? begin : 0;
  std::vector<double> y(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r)
    for (std::size_t c = 0; c < out_cols; ++c) y[r * out_cols + c] = a[(r + r0) * cols + c + c0];
  return make_result("slice", {out_rows, out_cols}, std::move(y), {a},
                     [out_rows, out_cols, cols, r0, c0](Node& self) {
                       Node& in = *self.inputs[0];
                       if (!in.requires_grad) return;
                       auto& g = in.ensure_grad();
                       for (std::size_t r = 0; r < out_rows; ++r)
                         for (std::size_t c = 0; c < out_cols; ++c)
                           g[(r + r0) * cols + c + c0] += self.grad[r * out_cols + c];
                     });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result("sum", {}, {s}, {a}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean of empty tensor");
  return mul_scalar(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor rfft_magnitude(const Tensor& sequence) {
  const std::size_t L = sequence.size();
  if (L == 0) throw ShapeError("rfft_magnitude: empty sequence");
  const std::size_t P = next_pow2(L);
  const std::size_t bins = P / 2 + 1;
  std::vector<std::complex<double>> F(P);
  for (std::size_t i = 0; i < L; ++i) F[i] = sequence[i];
  fft_inplace(F);
  std::vector<double> mag(bins);
  for (std::size_t k = 0; k < bins; ++k) mag[k] = std::abs(F[k]);
  F.resize(bins);
  return make_result("rfft_magnitude", {bins}, std::move(mag), {sequence},
                     [L, P, bins, F = std::move(F)](Node& self) {
                       Node& in = *self.inputs[0];
                       if (!in.requires_grad) return;
                       // d|F_k|/dx_n = Re(conj(F_k) e^{-2 pi i k n / P}) / |F_k|
                       std::vector<std::complex<double>> G(P);
                       for (std::size_t k = 0; k < bins; ++k) {
                         if (self.value[k] > 0.0) G[k] = self.grad[k] * std::conj(F[k]) / self.value[k];
                       }
                       fft_inplace(G);
                       auto& g = in.ensure_grad();
                       for (std::size_t n = 0; n < L; ++n) g[n] += G[n].real();
                     });
}

}  // namespace evderain::ad
