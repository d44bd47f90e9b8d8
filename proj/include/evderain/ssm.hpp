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


#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evderain/autodiff/tensor.hpp"

namespace evderain::ssm {

/// Per-step realization of a selective SSM over a sequence of length L with
/// C channels and N states per channel. All tensors are channel-major.
///
///   delta (C x L)  positive step sizes
///   a     (C x N)  negative diagonal transition
///   b     (N x L)  input projection per step, shared across channels
///   c     (N x L)  output projection per step, shared across channels
///   d     (C)      skip weight
///
/// Recurrence (zero-order hold on A, Euler on B), h_{-1} = 0:
///   h_t = exp(delta_t * a) * h_{t-1} + delta_t * b_t * x_t
///   y_t = <c_t, h_t> + d * x_t
struct ScanParams {
  ad::Tensor delta;
  ad::Tensor a;
  ad::Tensor b;
  ad::Tensor c;
  ad::Tensor d;
};

/// Raw view used by the forward kernels.
struct ScanView {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::size_t states = 0;
  std::span<const double> x, delta, a, b, c, d;
};

ScanView make_view(const ad::Tensor& x, const ScanParams& params);

/// Throws NumericError naming the first step holding a non-finite x, delta,
/// b or c value.
void check_finite(const ScanView& view);

/// Sequential recurrence; fixed summation order per channel.
std::vector<double> scan_reference(const ScanView& view);

/// Chunked evaluation: each block is scanned from a zero state while tracking
/// its cumulative decay, then block entry states are chained. Equal to the
/// reference up to rounding; bit-identical when block >= length.
std::vector<double> scan_blocked(const ScanView& view, std::size_t block);

/// Differentiable selective scan (reference forward, adjoint recurrence
/// backward). Returns (C x L).
ad::Tensor selective_scan(const ad::Tensor& x, const ScanParams& params);

/// Forward-only blocked scan returning (C x L); not recorded on a tape.
ad::Tensor scan_blocked(const ad::Tensor& x, const ScanParams& params, std::size_t block);

/// Learned projections that make the scan input-dependent.
struct SsmWeights {
  ad::Tensor delta_weight;  // (C x C)
  ad::Tensor delta_bias;    // (C)
  ad::Tensor b_weight;      // (N x C)
  ad::Tensor c_weight;      // (N x C)
  ad::Tensor a_log;         // (C x N), a = -exp(a_log) < 0 always
  ad::Tensor d;             // (C)
};

/// delta = softplus(W_delta u + b_delta), b = W_b u, c = W_c u.
ScanParams project(const ad::Tensor& u, const SsmWeights& weights);

/// project() followed by selective_scan().
ad::Tensor ssm_forward(const ad::Tensor& u, const SsmWeights& weights);

}  // namespace evderain::ssm
