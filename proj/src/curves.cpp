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


#include "evderain/curves.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evderain/errors.hpp"

namespace evderain {

namespace {

void check_bits(unsigned bits, std::size_t dims) {
  if (bits == 0 || bits > kMaxCurveBits || dims * bits > 64) {
    throw RangeError("curve bits must be in [1, 21], got " + std::to_string(bits));
  }
}

void check_coord(std::uint32_t c, unsigned bits) {
  if (bits < 32 && c >= (std::uint32_t{1} << bits)) {
    throw RangeError("grid coordinate " + std::to_string(c) + " exceeds " + std::to_string(bits) + " bits");
  }
}

// Skilling, "Programming the Hilbert curve" (2004): axes <-> transposed index.
void axes_to_transpose(std::array<std::uint32_t, 3>& X, unsigned bits) {
  constexpr int n = 3;
  const std::uint32_t M = std::uint32_t{1} << (bits - 1);
  for (std::uint32_t Q = M; Q > 1; Q >>= 1) {
    const std::uint32_t P = Q - 1;
    for (int i = 0; i < n; ++i) {
      if (X[i] & Q) {
        X[0] ^= P;
      } else {
        const std::uint32_t t = (X[0] ^ X[i]) & P;
        X[0] ^= t;
        X[i] ^= t;
      }
    }
  }
  for (int i = 1; i < n; ++i) X[i] ^= X[i - 1];
  std::uint32_t t = 0;
  for (std::uint32_t Q = M; Q > 1; Q >>= 1) {
    if (X[n - 1] & Q) t ^= Q - 1;
  }
  for (int i = 0; i < n; ++i) X[i] ^= t;
}

void transpose_to_axes(std::array<std::uint32_t, 3>& X, unsigned bits) {
  constexpr int n = 3;
  const std::uint64_t N = std::uint64_t{2} << (bits - 1);
  std::uint32_t t = X[n - 1] >> 1;
  for (int i = n - 1; i > 0; --i) X[i] ^= X[i - 1];
  X[0] ^= t;
  for (std::uint64_t Q = 2; Q != N; Q <<= 1) {
    const auto P = static_cast<std::uint32_t>(Q - 1);
    for (int i = n - 1; i >= 0; --i) {
      if (X[i] & Q) {
        X[0] ^= P;
      } else {
        t = (X[0] ^ X[i]) & P;
        X[0] ^= t;
        X[i] ^= t;
      }
    }
  }
}

std::uint32_t quantize(double v, std::uint32_t max_coord) {
  if (!(v > 0.0)) return 0;
  const double r = std::round(v);
  return r >= static_cast<double>(max_coord) ? max_coord : static_cast<std::uint32_t>(r);
}

}  // namespace

std::string to_string(ScanMode mode) {
  switch (mode) {
    case ScanMode::zorder: return "zorder";
    case ScanMode::zorder_transposed: return "zorder-transposed";
    case ScanMode::hilbert: return "hilbert";
    case ScanMode::hilbert_transposed: return "hilbert-transposed";
  }
  return "zorder";
}

ScanMode parse_scan_mode(std::string_view text) {
  for (auto mode : kAllScanModes) {
    if (to_string(mode) == text) return mode;
  }
  throw ConfigError("unknown scan mode '" + std::string(text) + "'");
}

std::uint64_t morton_encode(std::span<const std::uint32_t> coords, unsigned bits) {
  check_bits(bits, coords.size());
  std::uint64_t key = 0;
  const std::size_t dims = coords.size();
  for (std::size_t d = 0; d < dims; ++d) {
    check_coord(coords[d], bits);
    for (unsigned b = 0; b < bits; ++b) {
      key |= static_cast<std::uint64_t>((coords[d] >> b) & 1u) << (b * dims + d);
    }
  }
  return key;
}

void morton_decode(std::uint64_t key, unsigned bits, std::span<std::uint32_t> coords) {
  check_bits(bits, coords.size());
  const std::size_t dims = coords.size();
  for (std::size_t d = 0; d < dims; ++d) {
    std::uint32_t c = 0;
    for (unsigned b = 0; b < bits; ++b) {
      c |= static_cast<std::uint32_t>((key >> (b * dims + d)) & 1u) << b;
    }
    coords[d] = c;
  }
}

std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z, unsigned bits) {
  const std::array<std::uint32_t, 3> c{x, y, z};
  return morton_encode(std::span<const std::uint32_t>(c), bits);
}

GridCoord morton_decode(std::uint64_t key, unsigned bits) {
  GridCoord c{};
  morton_decode(key, bits, std::span<std::uint32_t>(c));
  return c;
}

std::uint64_t hilbert_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z, unsigned bits) {
  check_bits(bits, 3);
  check_coord(x, bits);
  check_coord(y, bits);
  check_coord(z, bits);
  std::array<std::uint32_t, 3> X{x, y, z};
  axes_to_transpose(X, bits);
  std::uint64_t key = 0;
  for (int b = static_cast<int>(bits) - 1; b >= 0; --b) {
    for (int i = 0; i < 3; ++i) key = (key << 1) | ((X[i] >> b) & 1u);
  }
  return key;
}

GridCoord hilbert_decode(std::uint64_t key, unsigned bits) {
  check_bits(bits, 3);
  if (bits < 21 && key >= (std::uint64_t{1} << (3 * bits))) throw RangeError("hilbert key out of range");
  std::array<std::uint32_t, 3> X{0, 0, 0};
  int pos = static_cast<int>(3 * bits) - 1;
  for (int b = static_cast<int>(bits) - 1; b >= 0; --b) {
    for (int i = 0; i < 3; ++i, --pos) X[i] |= static_cast<std::uint32_t>((key >> pos) & 1u) << b;
  }
  transpose_to_axes(X, bits);
  return X;
}

std::uint64_t curve_key(const CurvePoint& point, ScanMode mode, unsigned bits) {
  check_bits(bits, 3);
  const std::uint32_t max_coord = (std::uint32_t{1} << bits) - 1;
  std::uint32_t qx = quantize(point.x, max_coord);
  std::uint32_t qy = quantize(point.y, max_coord);
  const std::uint32_t qz = quantize(point.z * max_coord, max_coord);
  if (mode == ScanMode::zorder_transposed || mode == ScanMode::hilbert_transposed) std::swap(qx, qy);
  if (mode == ScanMode::zorder || mode == ScanMode::zorder_transposed) return morton_encode(qx, qy, qz, bits);
  return hilbert_encode(qx, qy, qz, bits);
}

SerializedCloud serialize_points(std::span<const CurvePoint> points, ScanMode mode, unsigned grid_bits) {
  std::vector<std::uint64_t> keys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) keys[i] = curve_key(points[i], mode, grid_bits);
  SerializedCloud out;
  out.mode = mode;
  out.grid_bits = grid_bits;
  out.order.resize(points.size());
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].window != points[b].window) return points[a].window < points[b].window;
    return keys[a] < keys[b];
  });
  return out;
}

std::vector<CurvePoint> curve_points(const EventCloud4D& cloud) {
  std::vector<CurvePoint> points;
  points.reserve(cloud.size());
  for (const auto& w : cloud.windows) {
    for (std::size_t i = 0; i < w.events.size(); ++i) {
      points.push_back(CurvePoint{static_cast<double>(w.events[i].x), static_cast<double>(w.events[i].y),
                                  w.z[i], static_cast<std::uint32_t>(w.index)});
    }
  }
  return points;
}

SerializedCloud serialize(const EventCloud4D& cloud, ScanMode mode, unsigned grid_bits) {
  const auto points = curve_points(cloud);
  return serialize_points(points, mode, grid_bits);
}

std::vector<std::size_t> invert_permutation(std::span<const std::size_t> order) {
  std::vector<std::size_t> inverse(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) inverse[order[i]] = i;
  return inverse;
}

}  // namespace evderain
