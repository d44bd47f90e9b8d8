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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evderain/events.hpp"

namespace evderain::testing {

struct CheckResult {
  std::string name;
  double error = 0.0;      // max relative (gradients) or absolute (scan) error
  double tolerance = 0.0;
  bool ok = false;
};

/// Finite-difference checks (h = 1e-5) of every differentiable op at 1e-4
/// and of the end-to-end micro network and joint loss at 1e-3.
std::vector<CheckResult> gradient_suite(std::uint64_t seed);

/// Blocked vs sequential scan on randomized cases plus causality, stability
/// and the hand-unrolled examples.
std::vector<CheckResult> ssm_suite(std::uint64_t seed);

/// Exhaustive encode/decode and adjacency checks.
std::vector<CheckResult> curve_suite();

/// fft loss identities, the direct DFT oracle and the lambda = 0 identity.
std::vector<CheckResult> loss_suite(std::uint64_t seed);

/// Confusion matrices with known counts, shuffled.
std::vector<CheckResult> metric_suite(std::uint64_t seed);

/// Direct O(L^2) evaluation of the frequency loss on the zero-padded length.
double naive_fft_loss(std::span<const double> p, std::span<const double> y, double eps, double eps_prime);

/// A few hundred random events over a small sensor, sorted, labeled.
std::vector<Event> random_events(std::uint64_t seed, std::size_t n, std::uint32_t width, std::uint32_t height,
                                 std::uint64_t duration_us);

}  // namespace evderain::testing
