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
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "evderain/events.hpp"

namespace evderain {

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct RainParams {
  double intensity = 50.0;             // mm/hr
  Range speed{4.0, 12.0};              // pixels per millisecond
  Range length{6.0, 20.0};             // pixels
  Range angle{-15.0, 15.0};            // degrees from vertical
  double events_per_step = 0.5;        // mean events per edge per pixel of travel
  std::uint64_t seed = 0;
};

enum class BackgroundMode { static_edges, moving_bar, loaded_file };

struct SceneParams {
  BackgroundMode background = BackgroundMode::static_edges;
  std::uint16_t width = 160;
  std::uint16_t height = 120;
  double duration = 0.5;               // seconds
  double background_rate = 2400.0;     // events per second
  std::filesystem::path background_file;  // for loaded_file
};

/// Streak births per second per mm/hr of intensity.
inline constexpr double kStreakRatePerIntensity = 0.57;

void validate(const RainParams& rain);
void validate(const SceneParams& scene);

nlohmann::json to_json(const RainParams& rain);
nlohmann::json to_json(const SceneParams& scene);
/// Both reject unknown keys with ConfigError; absent keys keep defaults.
RainParams rain_params_from_json(const nlohmann::json& j);
SceneParams scene_params_from_json(const nlohmann::json& j);

struct GeneratedStream {
  std::vector<Event> events;  // sorted by t, every event labeled
  std::size_t background_count = 0;
  std::size_t rain_count = 0;
};

/// Background events (label 0) from the scene model merged with rain streak
/// events (label 1). Streaks translate at a sampled velocity and emit +1 at
/// the leading edge and -1 at the trailing edge. Births for a given seed are
/// nested across intensities, so rain counts never decrease with intensity.
GeneratedStream generate(const SceneParams& scene, const RainParams& rain);

struct KnnRadius {
  double pixels = 3.0;
  std::uint64_t micros = 2000;
};

struct KnnLabelResult {
  std::vector<Event> events;
  bool clean_stream_empty = false;
};

/// Labels a rainy event background (0) iff at least `k` clean events lie
/// within `radius.pixels` (Euclidean) and `radius.micros` of it; otherwise
/// rain (1). With an empty clean stream every event is rain and the warning
/// flag is set.
KnnLabelResult knn_label(std::span<const Event> rainy, std::span<const Event> clean, std::size_t k,
                         KnnRadius radius);

}  // namespace evderain
