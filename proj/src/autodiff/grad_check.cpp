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


#include "evderain/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "evderain/errors.hpp"

namespace evderain::ad {

GradCheckReport grad_check(const ScalarFunction& f, std::vector<Tensor> inputs, double h, double tol,
                           double floor) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  GradCheckReport report;
  {
    const Tensor loss = f(inputs);
    backward(loss);
  }
  for (auto& t : inputs) {
    report.analytic.emplace_back(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), report.analytic.back().begin());
  }

  NoGradGuard no_grad;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto values = inputs[i].mutable_data();
    report.numeric.emplace_back(values.size(), 0.0);
    report.passed.emplace_back(values.size(), true);
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double orig = values[j];
      values[j] = orig + h;
      const double up = f(inputs).item();
      values[j] = orig - h;
      const double down = f(inputs).item();
      values[j] = orig;
      const double num = (up - down) / (2.0 * h);
      const double ana = report.analytic[i][j];
      report.numeric[i][j] = num;
      const double err = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor});
      report.max_rel_error = std::max(report.max_rel_error, err);
      if (!(err <= tol)) {
        report.passed[i][j] = false;
        report.ok = false;
      }
    }
  }
  return report;
}

}  // namespace evderain::ad
