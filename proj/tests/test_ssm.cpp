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


#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "evderain/autodiff/ops.hpp"
#include "evderain/errors.hpp"
#include "evderain/ssm.hpp"
#include "support/suites.hpp"

using namespace evderain;
using ad::Tensor;

namespace {

ssm::ScanParams unit_params(std::size_t L) {
  return {Tensor::full({1, L}, 1.0), Tensor::from({1, 1}, {-1.0}), Tensor::full({1, L}, 1.0),
          Tensor::full({1, L}, 1.0), Tensor::from({1}, {0.0})};
}

}  // namespace

TEST_CASE("single step") {
  const auto y = ssm::selective_scan(Tensor::from({1, 1}, {2.0}), unit_params(1));
  CHECK(y[0] == 2.0);
}

TEST_CASE("two steps decay by exp(-1)") {
  const auto y = ssm::selective_scan(Tensor::from({1, 2}, {1.0, 0.0}), unit_params(2));
  CHECK(y[0] == 1.0);
  CHECK(y[1] == doctest::Approx(0.36787944117144233).epsilon(1e-15));
}

TEST_CASE("zero input gives zero output") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t C = 2, L = 30, N = 3;
  auto rand = [&](ad::Shape s, double lo, double hi) {
    std::vector<double> v(ad::numel(s));
    for (auto& x : v) x = lo + (hi - lo) * (u(rng) + 1) / 2;
    return Tensor::from(s, v);
  };
  const ssm::ScanParams p{rand({C, L}, 0.1, 1), rand({C, N}, -2, -0.1), rand({N, L}, -1, 1), rand({N, L}, -1, 1),
                          rand({C}, -3, 3)};
  const auto y = ssm::selective_scan(Tensor::zeros({C, L}), p);
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("non-finite input names the first bad step") {
  auto x = Tensor::from({1, 4}, {1, 2, std::numeric_limits<double>::quiet_NaN(), 4});
  try {
    ssm::selective_scan(x, unit_params(4));
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(e.step() == 2);
  }
}

TEST_CASE("shape mismatch") {
  CHECK_THROWS_AS(ssm::selective_scan(Tensor::zeros({1, 3}), unit_params(4)), ShapeError);
}

TEST_CASE("block equal to length is bit identical") {
  const auto p = unit_params(5);
  const Tensor x = Tensor::from({1, 5}, {0.3, -1, 2, 0.5, 7});
  const auto view = ssm::make_view(x, p);
  CHECK(ssm::scan_blocked(view, 5) == ssm::scan_reference(view));
  CHECK(ssm::scan_blocked(view, 100) == ssm::scan_reference(view));
}

TEST_CASE("ssm oracle suite") {
  for (const auto& c : testing::ssm_suite(21)) {
    INFO(c.name << " error " << c.error);
    CHECK(c.ok);
  }
}

TEST_CASE("projected transition is negative and step sizes positive") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 3);
  const std::size_t C = 3, N = 2, L = 10;
  auto rand = [&](ad::Shape s) {
    std::vector<double> v(ad::numel(s));
    for (auto& x : v) x = n(rng);
    return Tensor::from(s, v);
  };
  const ssm::SsmWeights w{rand({C, C}), rand({C}), rand({N, C}), rand({N, C}), rand({C, N}), rand({C})};
  const auto p = ssm::project(rand({C, L}), w);
  for (double a : p.a.data()) CHECK(a < 0.0);
  for (double d : p.delta.data()) CHECK(d > 0.0);
}
