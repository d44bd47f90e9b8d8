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


#include "evderain/ssm.hpp"

#include <algorithm>
#include <cmath>

#include "evderain/autodiff/ops.hpp"
#include "evderain/errors.hpp"

namespace evderain::ssm {

ScanView make_view(const ad::Tensor& x, const ScanParams& params) {
  if (x.rank() != 2) throw ShapeError("selective_scan: x must be (channels x length), got " + ad::shape_string(x.shape()));
  ScanView v;
  v.channels = x.dim(0);
  v.length = x.dim(1);
  v.states = params.a.rank() == 2 ? params.a.dim(1) : 0;
  const ad::Shape cl{v.channels, v.length};
  const ad::Shape cn{v.channels, v.states};
  const ad::Shape nl{v.states, v.length};
  if (v.length == 0) throw ContractError("selective_scan: empty sequence");
  if (params.delta.shape() != cl || params.a.shape() != cn || params.b.shape() != nl || params.c.shape() != nl ||
      params.d.size() != v.channels) {
    throw ShapeError("selective_scan: x " + ad::shape_string(x.shape()) + ", delta " +
                     ad::shape_string(params.delta.shape()) + ", a " + ad::shape_string(params.a.shape()) + ", b " +
                     ad::shape_string(params.b.shape()) + ", c " + ad::shape_string(params.c.shape()) + ", d " +
                     ad::shape_string(params.d.shape()));
  }
  v.x = x.data();
  v.delta = params.delta.data();
  v.a = params.a.data();
  v.b = params.b.data();
  v.c = params.c.data();
  v.d = params.d.data();
  return v;
}

void check_finite(const ScanView& v) {
  std::size_t first = v.length;
  for (std::size_t ch = 0; ch < v.channels; ++ch) {
    for (std::size_t t = 0; t < std::min(first, v.length); ++t) {
      if (!std::isfinite(v.x[ch * v.length + t]) || !std::isfinite(v.delta[ch * v.length + t])) {
        first = t;
        break;
      }
    }
  }
  for (std::size_t n = 0; n < v.states; ++n) {
    for (std::size_t t = 0; t < std::min(first, v.length); ++t) {
      if (!std::isfinite(v.b[n * v.length + t]) || !std::isfinite(v.c[n * v.length + t])) {
        first = t;
        break;
      }
    }
  }
  if (first < v.length) {
    throw NumericError(first, "selective_scan: non-finite input at step " + std::to_string(first));
  }
}

std::vector<double> scan_reference(const ScanView& v) {
  check_finite(v);
  const std::size_t L = v.length, N = v.states;
  std::vector<double> y(v.channels * L);
  std::vector<double> h(N);
  for (std::size_t ch = 0; ch < v.channels; ++ch) {
    std::fill(h.begin(), h.end(), 0.0);
    const double* a = &v.a[ch * N];
    for (std::size_t t = 0; t < L; ++t) {
      const double dt = v.delta[ch * L + t];
      const double xt = v.x[ch * L + t];
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        h[n] = std::exp(dt * a[n]) * h[n] + dt * v.b[n * L + t] * xt;
        acc += v.c[n * L + t] * h[n];
      }
      y[ch * L + t] = acc + v.d[ch] * xt;
    }
  }
  return y;
}

std::vector<double> scan_blocked(const ScanView& v, std::size_t block) {
  if (block == 0) throw ContractError("scan_blocked: block length must be positive");
  check_finite(v);
  const std::size_t L = v.length, N = v.states;
  std::vector<double> y(v.channels * L);
  std::vector<double> local(N), decay(N), h_in(N), h_next(N);
  for (std::size_t ch = 0; ch < v.channels; ++ch) {
    const double* a = &v.a[ch * N];
    std::fill(h_in.begin(), h_in.end(), 0.0);
    for (std::size_t start = 0; start < L; start += block) {
      const std::size_t end = std::min(L, start + block);
      std::fill(local.begin(), local.end(), 0.0);
      std::fill(decay.begin(), decay.end(), 1.0);
      for (std::size_t t = start; t < end; ++t) {
        const double dt = v.delta[ch * L + t];
        const double xt = v.x[ch * L + t];
        double acc = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
          const double abar = std::exp(dt * a[n]);
          local[n] = abar * local[n] + dt * v.b[n * L + t] * xt;
          decay[n] *= abar;
          acc += v.c[n * L + t] * (local[n] + decay[n] * h_in[n]);
        }
        y[ch * L + t] = acc + v.d[ch] * xt;
      }
      for (std::size_t n = 0; n < N; ++n) h_next[n] = local[n] + decay[n] * h_in[n];
      std::swap(h_in, h_next);
    }
  }
  return y;
}

ad::Tensor scan_blocked(const ad::Tensor& x, const ScanParams& params, std::size_t block) {
  const ScanView v = make_view(x, params);
  return ad::Tensor::from({v.channels, v.length}, scan_blocked(v, block));
}

ad::Tensor selective_scan(const ad::Tensor& x, const ScanParams& params) {
  const ScanView v = make_view(x, params);
  check_finite(v);
  const std::size_t C = v.channels, L = v.length, N = v.states;
  const bool record = ad::grad_enabled() &&
                      (x.requires_grad() || params.delta.requires_grad() || params.a.requires_grad() ||
                       params.b.requires_grad() || params.c.requires_grad() || params.d.requires_grad());
  if (!record) {
    return ad::Tensor::from({C, L}, scan_reference(v));
  }
  // Keep every hidden state for the adjoint pass: (C x L x N).
  std::vector<double> states(C * L * N);
  std::vector<double> y(C * L);
  for (std::size_t ch = 0; ch < C; ++ch) {
    const double* a = &v.a[ch * N];
    for (std::size_t t = 0; t < L; ++t) {
      const double dt = v.delta[ch * L + t];
      const double xt = v.x[ch * L + t];
      double* h = &states[(ch * L + t) * N];
      const double* hp = t ? &states[(ch * L + t - 1) * N] : nullptr;
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        h[n] = std::exp(dt * a[n]) * (hp ? hp[n] : 0.0) + dt * v.b[n * L + t] * xt;
        acc += v.c[n * L + t] * h[n];
      }
      y[ch * L + t] = acc + v.d[ch] * xt;
    }
  }
  return ad::make_result(
      "selective_scan", {C, L}, std::move(y), {x, params.delta, params.a, params.b, params.c, params.d},
      [C, L, N, states = std::move(states)](ad::Node& self) {
        ad::Node& nx = *self.inputs[0];
        ad::Node& ndelta = *self.inputs[1];
        ad::Node& na = *self.inputs[2];
        ad::Node& nb = *self.inputs[3];
        ad::Node& nc = *self.inputs[4];
        ad::Node& nd = *self.inputs[5];
        std::vector<double> gx(C * L, 0.0), gdelta(C * L, 0.0), ga(C * N, 0.0), gb(N * L, 0.0), gc(N * L, 0.0),
            gd(C, 0.0);
        std::vector<double> dh(N);
        const auto& dy = self.grad;
        for (std::size_t ch = 0; ch < C; ++ch) {
          const double* a = &na.value[ch * N];
          std::fill(dh.begin(), dh.end(), 0.0);
          for (std::size_t t = L; t-- > 0;) {
            const double g = dy[ch * L + t];
            const double dt = ndelta.value[ch * L + t];
            const double xt = nx.value[ch * L + t];
            const double* h = &states[(ch * L + t) * N];
            const double* hp = t ? &states[(ch * L + t - 1) * N] : nullptr;
            gd[ch] += g * xt;
            gx[ch * L + t] += g * nd.value[ch];
            for (std::size_t n = 0; n < N; ++n) {
              const double bt = nb.value[n * L + t];
              gc[n * L + t] += g * h[n];
              dh[n] += g * nc.value[n * L + t];
              const double abar = std::exp(dt * a[n]);
              const double prev = hp ? hp[n] : 0.0;
              const double dabar = dh[n] * prev;
              ga[ch * N + n] += dabar * abar * dt;
              gdelta[ch * L + t] += dabar * abar * a[n] + dh[n] * bt * xt;
              gb[n * L + t] += dh[n] * dt * xt;
              gx[ch * L + t] += dh[n] * dt * bt;
              dh[n] *= abar;
            }
          }
        }
        ad::accumulate_grad(nx, gx);
        ad::accumulate_grad(ndelta, gdelta);
        ad::accumulate_grad(na, ga);
        ad::accumulate_grad(nb, gb);
        ad::accumulate_grad(nc, gc);
        ad::accumulate_grad(nd, gd);
      });
}

ScanParams project(const ad::Tensor& u, const SsmWeights& w) {
  ScanParams p;
  p.delta = ad::softplus(ad::linear(u, w.delta_weight, w.delta_bias));
  p.b = ad::linear(u, w.b_weight);
  p.c = ad::linear(u, w.c_weight);
  p.a = ad::mul_scalar(ad::exp(w.a_log), -1.0);
  p.d = w.d;
  return p;
}

ad::Tensor ssm_forward(const ad::Tensor& u, const SsmWeights& weights) {
  return selective_scan(u, project(u, weights));
}

}  // namespace evderain::ssm
