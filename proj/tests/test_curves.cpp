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

#include <algorithm>
#include <array>
#include <cstdlib>
#include <random>
#include <set>

#include "evderain/curves.hpp"
#include "evderain/errors.hpp"

using namespace evderain;

namespace {

// Bit-by-bit interleave, coordinate d on bit positions d, d + dims, ...
std::uint64_t interleave(const std::vector<std::uint32_t>& coords, unsigned bits) {
  std::uint64_t key = 0;
  const std::size_t dims = coords.size();
  for (unsigned b = 0; b < bits; ++b) {
    for (std::size_t d = 0; d < dims; ++d) {
      if ((coords[d] >> b) & 1U) key |= std::uint64_t{1} << (b * dims + d);
    }
  }
  return key;
}

}  // namespace

TEST_CASE("morton origin") { CHECK(morton_encode(0, 0, 0, 10) == 0); }

TEST_CASE("morton 2d example") {
  const std::array<std::uint32_t, 2> xy{3, 5};
  CHECK(morton_encode(xy, 3) == 39);
  CHECK(interleave({3, 5}, 3) == 39);
}

TEST_CASE("morton matches brute-force interleave") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const unsigned bits = 1 + rng() % 21;
    const std::uint32_t mask = (1U << bits) - 1;
    const std::uint32_t x = rng() & mask, y = rng() & mask, z = rng() & mask;
    CHECK(morton_encode(x, y, z, bits) == interleave({x, y, z}, bits));
  }
}

TEST_CASE("morton and hilbert round trip on 16^3") {
  std::set<std::uint64_t> morton_keys, hilbert_keys;
  for (std::uint32_t x = 0; x < 16; ++x) {
    for (std::uint32_t y = 0; y < 16; ++y) {
      for (std::uint32_t z = 0; z < 16; ++z) {
        const auto m = morton_encode(x, y, z, 4);
        const auto h = hilbert_encode(x, y, z, 4);
        CHECK(morton_decode(m, 4) == GridCoord{x, y, z});
        CHECK(hilbert_decode(h, 4) == GridCoord{x, y, z});
        morton_keys.insert(m);
        hilbert_keys.insert(h);
      }
    }
  }
  CHECK(morton_keys.size() == 4096);
  CHECK(hilbert_keys.size() == 4096);
  CHECK(*hilbert_keys.rbegin() == 4095);
  CHECK(*morton_keys.rbegin() == 4095);
}

TEST_CASE("hilbert origin and unit steps on 8^3") {
  CHECK(hilbert_encode(0, 0, 0, 3) == 0);
  auto prev = hilbert_decode(0, 3);
  for (std::uint64_t k = 1; k < 512; ++k) {
    const auto cur = hilbert_decode(k, 3);
    int distance = 0;
    for (int d = 0; d < 3; ++d) distance += std::abs(static_cast<int>(cur[d]) - static_cast<int>(prev[d]));
    CHECK(distance == 1);
    prev = cur;
  }
}

TEST_CASE("hilbert stays adjacent at larger sizes") {
  for (unsigned bits : {1U, 2U, 5U}) {
    auto prev = hilbert_decode(0, bits);
    const std::uint64_t n = std::uint64_t{1} << (3 * bits);
    for (std::uint64_t k = 1; k < n; ++k) {
      const auto cur = hilbert_decode(k, bits);
      int distance = 0;
      for (int d = 0; d < 3; ++d) distance += std::abs(static_cast<int>(cur[d]) - static_cast<int>(prev[d]));
      REQUIRE(distance == 1);
      prev = cur;
    }
  }
}

TEST_CASE("out of range coordinates and bit counts") {
  CHECK_THROWS_AS(morton_encode(8, 0, 0, 3), RangeError);
  CHECK_THROWS_AS(hilbert_encode(0, 0, 8, 3), RangeError);
  CHECK_THROWS_AS(morton_encode(0, 0, 0, 22), RangeError);
  CHECK_THROWS_AS(hilbert_encode(0, 0, 0, 0), RangeError);
}

TEST_CASE("scan mode names") {
  for (auto m : kAllScanModes) CHECK(parse_scan_mode(to_string(m)) == m);
  CHECK(kAllScanModes.size() == 4);
  CHECK_THROWS_AS(parse_scan_mode("spiral"), ConfigError);
}

TEST_CASE("single point serializes to itself") {
  const std::vector<CurvePoint> pts{{5, 7, 0.3, 0}};
  for (auto m : kAllScanModes) CHECK(serialize_points(pts, m, 10).order == std::vector<std::size_t>{0});
}

TEST_CASE("points in one cell keep input order") {
  const std::vector<CurvePoint> pts{{3, 3, 0.5, 0}, {3.2, 2.9, 0.5, 0}, {2.8, 3.1, 0.5, 0}};
  for (auto m : kAllScanModes) CHECK(serialize_points(pts, m, 10).order == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("transposed z-order reverses an x/y pair") {
  const std::vector<CurvePoint> pts{{1, 0, 0, 0}, {0, 1, 0, 0}};
  const auto a = serialize_points(pts, ScanMode::zorder, 10).order;
  const auto b = serialize_points(pts, ScanMode::zorder_transposed, 10).order;
  CHECK(a == std::vector<std::size_t>{0, 1});
  CHECK(b == std::vector<std::size_t>{1, 0});
}

TEST_CASE("serialization is a window-major permutation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CurvePoint> pts;
    for (int i = 0; i < 300; ++i) {
      pts.push_back({u(rng) * 100, u(rng) * 80, u(rng), static_cast<std::uint32_t>(i * 4 / 300)});
    }
    for (auto m : kAllScanModes) {
      const auto s = serialize_points(pts, m, 8);
      auto sorted = s.order;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < sorted.size(); ++i) REQUIRE(sorted[i] == i);
      for (std::size_t i = 1; i < s.order.size(); ++i) {
        const auto& a = pts[s.order[i - 1]];
        const auto& b = pts[s.order[i]];
        REQUIRE(a.window <= b.window);
        if (a.window == b.window) REQUIRE(curve_key(a, m, 8) <= curve_key(b, m, 8));
      }
      const auto inv = invert_permutation(s.order);
      for (std::size_t i = 0; i < s.order.size(); ++i) REQUIRE(inv[s.order[i]] == i);
    }
  }
}

TEST_CASE("serialize matches serialize_points over the flattened cloud") {
  std::vector<Event> events;
  for (std::uint64_t i = 0; i < 50; ++i) events.push_back(Event{static_cast<std::uint32_t>(i * 7 % 32), static_cast<std::uint32_t>(i * 3 % 20), i * 900, 1, {}});
  const auto cloud = build_cloud(events, 0.01, 5, 32, 20);
  for (auto m : kAllScanModes) CHECK(serialize(cloud, m, 10).order == serialize_points(curve_points(cloud), m, 10).order);
}
