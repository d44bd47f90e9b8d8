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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evderain/events.hpp"

namespace evderain {

enum class ScanMode { zorder, zorder_transposed, hilbert, hilbert_transposed };

inline constexpr std::array<ScanMode, 4> kAllScanModes{ScanMode::zorder, ScanMode::zorder_transposed,
                                                       ScanMode::hilbert, ScanMode::hilbert_transposed};

std::string to_string(ScanMode mode);
/// Accepts "zorder", "zorder-transposed", "hilbert", "hilbert-transposed".
ScanMode parse_scan_mode(std::string_view text);

inline constexpr unsigned kMaxCurveBits = 21;

using GridCoord = std::array<std::uint32_t, 3>;

/// Interleaves coordinate bits; coords[0] lands on bit 0, coords[1] on bit 1,
/// and so on. Works for any dimension with dims * bits <= 64.
std::uint64_t morton_encode(std::span<const std::uint32_t> coords, unsigned bits);
void morton_decode(std::uint64_t key, unsigned bits, std::span<std::uint32_t> coords);

std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z, unsigned bits);
GridCoord morton_decode(std::uint64_t key, unsigned bits);

/// Index along the 3D Hilbert curve (Skilling's transpose construction).
std::uint64_t hilbert_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z, unsigned bits);
GridCoord hilbert_decode(std::uint64_t key, unsigned bits);

/// Point as seen by the serializer. x, y in pixels, z in [0, 1].
struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::uint32_t window = 0;
};

struct SerializedCloud {
  std::vector<std::size_t> order;  // order[i] = index of the i-th point in scan order
  ScanMode mode = ScanMode::zorder;
  unsigned grid_bits = 10;
};

/// Curve key of a single point after quantization (x, y, z * (2^bits - 1)).
std::uint64_t curve_key(const CurvePoint& point, ScanMode mode, unsigned bits);

/// Stable sort by (window, curve key).
SerializedCloud serialize_points(std::span<const CurvePoint> points, ScanMode mode, unsigned grid_bits);

/// Serializes the flattened cloud; indices refer to `flatten(cloud)`.
SerializedCloud serialize(const EventCloud4D& cloud, ScanMode mode, unsigned grid_bits);

std::vector<CurvePoint> curve_points(const EventCloud4D& cloud);

/// inverse[order[i]] = i
std::vector<std::size_t> invert_permutation(std::span<const std::size_t> order);

}  // namespace evderain
