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

#include <functional>
#include <span>
#include <vector>

#include "evderain/autodiff/tensor.hpp"

namespace evderain::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  /// passed[i][j]: element j of input i agrees within tolerance.
  std::vector<std::vector<bool>> passed;
  std::vector<std::vector<double>> analytic;
  std::vector<std::vector<double>> numeric;
  bool ok = true;
};

using ScalarFunction = std::function<Tensor(std::span<const Tensor>)>;

/// Compares reverse-mode gradients of scalar `f` with central differences.
/// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
/// near-zero gradients from amplifying rounding noise.
GradCheckReport grad_check(const ScalarFunction& f, std::vector<Tensor> inputs, double h = 1e-5,
                           double tol = 1e-4, double floor = 1e-3);

}  // namespace evderain::ad
