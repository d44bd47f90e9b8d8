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


#include "evderain/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "evderain/errors.hpp"

namespace evderain {

namespace {

struct Extent {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::size_t index(std::int64_t x, std::int64_t y) const { return static_cast<std::size_t>(y * width + x); }
  bool contains(std::int64_t x, std::int64_t y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

Extent extent_of(std::span<const Event> events) {
  Extent e;
  for (const auto& ev : events) {
    e.width = std::max<std::int64_t>(e.width, ev.x + 1);
    e.height = std::max<std::int64_t>(e.height, ev.y + 1);
  }
  return e;
}

}  // namespace

void validate(const FilterConfig& cfg) {
  if (!(cfg.ts_tau > 0.0)) throw ConfigError("ts_tau must be > 0");
  if (!std::isfinite(cfg.ts_threshold)) throw ConfigError("ts_threshold must be finite");
  if (cfg.density_radius < 1 || cfg.density_window < 1 || cfg.density_min_support < 1) {
    throw ConfigError("density filter radius, window and min_support must be >= 1");
  }
}

nlohmann::json to_json(const FilterConfig& cfg) {
  return {{"ts_tau", cfg.ts_tau},
          {"ts_threshold", cfg.ts_threshold},
          {"density_radius", cfg.density_radius},
          {"density_window", cfg.density_window},
          {"density_min_support", cfg.density_min_support}};
}

FilterConfig filter_config_from_json(const nlohmann::json& j) {
  FilterConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "ts_tau") cfg.ts_tau = value.get<double>();
      else if (key == "ts_threshold") cfg.ts_threshold = value.get<double>();
      else if (key == "density_radius") cfg.density_radius = value.get<std::uint32_t>();
      else if (key == "density_window") cfg.density_window = value.get<std::uint64_t>();
      else if (key == "density_min_support") cfg.density_min_support = value.get<std::uint32_t>();
      else throw ConfigError("unknown filter key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad filter value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::vector<std::uint8_t> ts_filter(std::span<const Event> events, const FilterConfig& cfg) {
  validate(cfg);
  check_sorted(events);
  const Extent ext = extent_of(events);
  std::vector<std::optional<std::uint64_t>> surface(static_cast<std::size_t>(ext.width * ext.height));
  std::vector<std::uint8_t> out(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    double support = 0.0;
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const std::int64_t x = static_cast<std::int64_t>(e.x) + dx, y = static_cast<std::int64_t>(e.y) + dy;
        if (!ext.contains(x, y)) continue;
        const auto& last = surface[ext.index(x, y)];
        if (last) support += std::exp(-static_cast<double>(e.t - *last) / cfg.ts_tau);
      }
    }
    out[i] = support > cfg.ts_threshold ? 0 : 1;
    surface[ext.index(e.x, e.y)] = e.t;
  }
  return out;
}

std::vector<std::uint8_t> density_filter(std::span<const Event> events, const FilterConfig& cfg) {
  validate(cfg);
  check_sorted(events);
  const Extent ext = extent_of(events);
  // Per-pixel timestamp lists, sorted because the stream is.
  std::vector<std::vector<std::uint64_t>> times(static_cast<std::size_t>(ext.width * ext.height));
  for (const auto& e : events) times[ext.index(e.x, e.y)].push_back(e.t);
  const auto r = static_cast<std::int64_t>(cfg.density_radius);
  std::vector<std::uint8_t> out(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::uint64_t lo = e.t > cfg.density_window ? e.t - cfg.density_window : 0;
    const std::uint64_t hi = e.t > std::numeric_limits<std::uint64_t>::max() - cfg.density_window
                                 ? std::numeric_limits<std::uint64_t>::max()
                                 : e.t + cfg.density_window;
    std::size_t count = 0;
    for (std::int64_t dy = -r; dy <= r; ++dy) {
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        const std::int64_t x = static_cast<std::int64_t>(e.x) + dx, y = static_cast<std::int64_t>(e.y) + dy;
        if (!ext.contains(x, y)) continue;
        const auto& ts = times[ext.index(x, y)];
        count += static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), hi) -
                                          std::lower_bound(ts.begin(), ts.end(), lo));
      }
    }
    out[i] = count - 1 >= cfg.density_min_support ? 0 : 1;  // minus the event itself
  }
  return out;
}

}  // namespace evderain
