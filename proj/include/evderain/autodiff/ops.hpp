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

namespace evderain::ad {

// Elementwise ops require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor softplus(const Tensor& a);

/// (m x k) . (k x n)
Tensor matmul(const Tensor& a, const Tensor& b);
/// Channel-major linear layer: weight (out x in), input (in x N), bias (out).
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias = {});
Tensor transpose(const Tensor& a);

/// 1D convolution over a (channels x length) input with zero "same" padding;
/// kernel length must be odd. Dense weight is (out x in x k); depthwise
/// weight is (channels x k). Bias (out) is optional.
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias = {}, bool depthwise = false);

enum class Mode { train, eval };

/// Running statistics of a batch-norm layer; updated in place in train mode.
struct BatchNormStats {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Normalizes each channel of a (channels x length) input over the length
/// axis. Train mode uses batch statistics (biased variance) and updates the
/// running ones; eval mode is the affine map with running statistics.
Tensor batchnorm1d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                   Mode mode);

Tensor softmax(const Tensor& a, std::size_t axis);

/// out[:, n] = table[:, indices[n]] for a (channels x rows) table.
Tensor gather_cols(const Tensor& table, std::span<const std::size_t> indices);
inline Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> indices) {
  return gather_cols(table, indices);
}

/// Per-segment column mean of (channels x N) input; empty segments give 0.
Tensor segment_mean(const Tensor& input, std::span<const std::size_t> segment, std::size_t num_segments);

/// Concatenate 2D tensors along `axis`.
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
/// Half-open [begin, end) along `axis` of a 2D tensor (or 1D with axis 0).
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Magnitudes of the unnormalized real DFT of a 1D sequence, zero-padded to
/// the next power of two L'. Returns bins 0..L'/2, so that
/// (|F_0|^2 + 2 sum_{0<k<L'/2} |F_k|^2 + |F_{L'/2}|^2) / L' = sum x^2.
Tensor rfft_magnitude(const Tensor& sequence);

}  // namespace evderain::ad
