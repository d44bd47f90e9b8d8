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


#include "evderain/raingen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "evderain/errors.hpp"

namespace evderain {

namespace {

constexpr double kIntensityBand = 100.0;  // mm/hr per nested birth band

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xD6E8FEB86659FD93ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(const Range& r) { return r.min + (r.max - r.min) * uniform(); }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
  std::size_t poisson(double mean) {
    // Inversion; means here are small.
    const double limit = std::exp(-mean);
    double prod = uniform();
    std::size_t n = 0;
    while (prod > limit) {
      prod *= uniform();
      ++n;
    }
    return n;
  }
  std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n))); }

 private:
  std::mt19937_64 engine_;
};

struct Pixel {
  int x;
  int y;
};

bool inside(const SceneParams& s, int x, int y) { return x >= 0 && y >= 0 && x < s.width && y < s.height; }

void push_event(std::vector<Event>& out, const SceneParams& s, int x, int y, double t_us, int p, std::uint8_t label) {
  if (!inside(s, x, y) || t_us < 0.0) return;
  const auto t = static_cast<std::uint64_t>(t_us);
  if (t >= static_cast<std::uint64_t>(std::llround(s.duration * 1e6))) return;
  out.push_back(Event{static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), t, static_cast<std::int8_t>(p), label});
}

/// Fixed edges under small periodic camera shake.
std::vector<Event> static_edges(const SceneParams& s, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Pixel> edge;
  const int segments = 12;
  for (int i = 0; i < segments; ++i) {
    const double x0 = rng.uniform() * s.width, y0 = rng.uniform() * s.height;
    const double len = 10.0 + 30.0 * rng.uniform();
    const double theta = rng.uniform() * std::numbers::pi;
    for (int step = 0; step <= static_cast<int>(len); ++step) {
      edge.push_back({static_cast<int>(std::lround(x0 + step * std::cos(theta))),
                      static_cast<int>(std::lround(y0 + step * std::sin(theta)))});
    }
  }
  const double fx = 9.0 + 4.0 * rng.uniform(), fy = 7.0 + 4.0 * rng.uniform();
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  const double amplitude = 1.0;  // pixels
  std::vector<Event> out;
  const double end_us = s.duration * 1e6;
  const double rate_per_us = s.background_rate * 1e-6;
  // Emission intensity follows shake speed; thinning against twice the mean.
  for (double t = rng.exponential(2.0 * rate_per_us); t < end_us; t += rng.exponential(2.0 * rate_per_us)) {
    const double ts = t * 1e-6;
    const double vx = std::cos(2.0 * std::numbers::pi * fx * ts);
    const double vy = std::cos(2.0 * std::numbers::pi * fy * ts + phase);
    const double speed = std::sqrt(vx * vx + vy * vy) / std::numbers::sqrt2;  // in [0, 1]
    if (rng.uniform() >= speed) continue;
    const Pixel& px = edge[rng.index(edge.size())];
    const double ox = amplitude * std::sin(2.0 * std::numbers::pi * fx * ts);
    const double oy = amplitude * std::sin(2.0 * std::numbers::pi * fy * ts + phase);
    const int polarity = (vx + vy) >= 0.0 ? 1 : -1;
    push_event(out, s, px.x + static_cast<int>(std::lround(ox)), px.y + static_cast<int>(std::lround(oy)), t,
               polarity, 0);
  }
  return out;
}

/// Vertical bar sweeping back and forth horizontally.
std::vector<Event> moving_bar(const SceneParams& s, std::uint64_t seed) {
  Rng rng(seed);
  const double bar_width = 8.0;
  const double speed = 0.15 + 0.1 * rng.uniform();  // px per ms
  const int y0 = s.height / 4, y1 = 3 * s.height / 4;
  std::vector<Event> out;
  const double end_us = s.duration * 1e6;
  const double rate_per_us = s.background_rate * 1e-6;
  const double travel = std::max(1.0, s.width - bar_width);
  for (double t = rng.exponential(rate_per_us); t < end_us; t += rng.exponential(rate_per_us)) {
    const double pos = std::fmod(speed * t * 1e-3, 2.0 * travel);
    const double left = pos < travel ? pos : 2.0 * travel - pos;
    const bool leading = rng.uniform() < 0.5;
    const int x = static_cast<int>(std::lround(leading ? left + bar_width : left));
    const int y = y0 + static_cast<int>(rng.index(static_cast<std::size_t>(std::max(1, y1 - y0))));
    push_event(out, s, x, y, t, leading ? 1 : -1, 0);
  }
  return out;
}

std::vector<Event> loaded_background(const SceneParams& s) {
  auto events = load_events(s.background_file, format_from_path(s.background_file));
  std::vector<Event> out;
  if (events.empty()) return out;
  const std::uint64_t t0 = events.front().t;
  for (auto e : events) {
    e.t -= t0;
    e.label = 0;
    push_event(out, s, static_cast<int>(e.x), static_cast<int>(e.y), static_cast<double>(e.t), e.p, 0);
  }
  return out;
}

void emit_streak(std::vector<Event>& out, const SceneParams& s, const RainParams& r, double birth_us, Rng& rng) {
  const double speed = rng.uniform(r.speed);  // px per ms
  const double length = rng.uniform(r.length);
  const double angle = rng.uniform(r.angle) * std::numbers::pi / 180.0;
  const double dx = std::sin(angle), dy = std::cos(angle);
  const double hx = rng.uniform() * s.width;
  const double hy = -length + rng.uniform() * (s.height + length);
  const double step_us = 1e3 / speed;
  const double end_us = s.duration * 1e6;
  for (int step = 0;; ++step) {
    const double t = birth_us + step * step_us;
    const double x = hx + step * dx, y = hy + step * dy;
    const double tail_x = x - length * dx, tail_y = y - length * dy;
    if (t >= end_us || tail_y >= s.height || tail_x < -length || tail_x > s.width + length) break;
    const std::size_t lead = rng.poisson(r.events_per_step);
    const std::size_t trail = rng.poisson(r.events_per_step);
    for (std::size_t i = 0; i < lead; ++i) {
      push_event(out, s, static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)),
                 t + rng.uniform() * step_us, 1, 1);
    }
    for (std::size_t i = 0; i < trail; ++i) {
      push_event(out, s, static_cast<int>(std::lround(tail_x)), static_cast<int>(std::lround(tail_y)),
                 t + rng.uniform() * step_us, -1, 1);
    }
  }
}

void check_range(const Range& r, const char* name) {
  if (!(r.min <= r.max) || !std::isfinite(r.min) || !std::isfinite(r.max)) {
    throw ConfigError(std::string("rain ") + name + " range is empty");
  }
}

Range range_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("ranges are [min, max] arrays");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void validate(const RainParams& rain) {
  if (!(rain.intensity >= 0.0)) throw ConfigError("rain intensity must be >= 0");
  check_range(rain.speed, "speed");
  check_range(rain.length, "length");
  check_range(rain.angle, "angle");
  if (!(rain.speed.min > 0.0)) throw ConfigError("rain speed must be > 0");
  if (!(rain.events_per_step >= 0.0)) throw ConfigError("events_per_step must be >= 0");
}

void validate(const SceneParams& scene) {
  if (!(scene.duration > 0.0)) throw ConfigError("scene duration must be > 0");
  if (scene.width == 0 || scene.height == 0) throw ConfigError("sensor size must be positive");
  if (!(scene.background_rate >= 0.0)) throw ConfigError("background rate must be >= 0");
}

nlohmann::json to_json(const RainParams& r) {
  return {{"intensity", r.intensity},
          {"speed", {r.speed.min, r.speed.max}},
          {"length", {r.length.min, r.length.max}},
          {"angle", {r.angle.min, r.angle.max}},
          {"events_per_step", r.events_per_step},
          {"seed", r.seed}};
}

nlohmann::json to_json(const SceneParams& s) {
  const char* mode = s.background == BackgroundMode::static_edges ? "static-edges"
                     : s.background == BackgroundMode::moving_bar ? "moving-bar"
                                                                  : "loaded-file";
  return {{"background", mode},         {"width", s.width},
          {"height", s.height},         {"duration", s.duration},
          {"background_rate", s.background_rate}, {"background_file", s.background_file.string()}};
}

RainParams rain_params_from_json(const nlohmann::json& j) {
  RainParams r;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "intensity") r.intensity = value.get<double>();
      else if (key == "speed") r.speed = range_from_json(value);
      else if (key == "length") r.length = range_from_json(value);
      else if (key == "angle") r.angle = range_from_json(value);
      else if (key == "events_per_step") r.events_per_step = value.get<double>();
      else if (key == "seed") r.seed = value.get<std::uint64_t>();
      else throw ConfigError("unknown rain key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad rain value: ") + e.what());
  }
  validate(r);
  return r;
}

SceneParams scene_params_from_json(const nlohmann::json& j) {
  SceneParams s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "background") {
        const auto m = value.get<std::string>();
        if (m == "static-edges") s.background = BackgroundMode::static_edges;
        else if (m == "moving-bar") s.background = BackgroundMode::moving_bar;
        else if (m == "loaded-file") s.background = BackgroundMode::loaded_file;
        else throw ConfigError("unknown background mode '" + m + "'");
      } else if (key == "width") s.width = value.get<std::uint16_t>();
      else if (key == "height") s.height = value.get<std::uint16_t>();
      else if (key == "duration") s.duration = value.get<double>();
      else if (key == "background_rate") s.background_rate = value.get<double>();
      else if (key == "background_file") s.background_file = value.get<std::string>();
      else throw ConfigError("unknown scene key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scene value: ") + e.what());
  }
  validate(s);
  return s;
}

GeneratedStream generate(const SceneParams& scene, const RainParams& rain) {
  validate(scene);
  validate(rain);
  std::vector<Event> background;
  const std::uint64_t bg_seed = derive_seed(rain.seed, 1);
  switch (scene.background) {
    case BackgroundMode::static_edges: background = static_edges(scene, bg_seed); break;
    case BackgroundMode::moving_bar: background = moving_bar(scene, bg_seed); break;
    case BackgroundMode::loaded_file: background = loaded_background(scene); break;
  }

  // Births: one Poisson process per intensity band of kIntensityBand mm/hr;
  // a birth with mark m in its band is kept iff band_start + m < intensity.
  std::vector<Event> rain_events;
  const double end_us = scene.duration * 1e6;
  const double band_rate_per_us = kStreakRatePerIntensity * kIntensityBand * 1e-6;
  for (std::uint64_t band = 0; static_cast<double>(band) * kIntensityBand < rain.intensity; ++band) {
    Rng births(derive_seed(rain.seed, 2, band));
    std::uint64_t index = 0;
    for (double t = births.exponential(band_rate_per_us); t < end_us;
         t += births.exponential(band_rate_per_us), ++index) {
      const double mark = births.uniform() * kIntensityBand;
      if (static_cast<double>(band) * kIntensityBand + mark >= rain.intensity) continue;
      Rng streak(derive_seed(rain.seed, 3 + band, index));
      emit_streak(rain_events, scene, rain, t, streak);
    }
  }

  GeneratedStream out;
  out.background_count = background.size();
  out.rain_count = rain_events.size();
  out.events = std::move(background);
  out.events.insert(out.events.end(), rain_events.begin(), rain_events.end());
  std::stable_sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return out;
}

KnnLabelResult knn_label(std::span<const Event> rainy, std::span<const Event> clean, std::size_t k,
                         KnnRadius radius) {
  check_sorted(rainy);
  check_sorted(clean);
  KnnLabelResult result;
  result.events.assign(rainy.begin(), rainy.end());
  result.clean_stream_empty = clean.empty();
  if (k == 0) {
    for (auto& e : result.events) e.label = 0;
    return result;
  }
  // Per-pixel sorted timestamps of the clean stream.
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> by_pixel;
  auto key = [](std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
  };
  for (const auto& e : clean) by_pixel[key(e.x, e.y)].push_back(e.t);
  const auto r = static_cast<std::int64_t>(std::floor(radius.pixels));
  const double r2 = radius.pixels * radius.pixels;
  for (auto& e : result.events) {
    std::size_t support = 0;
    const std::uint64_t lo = e.t > radius.micros ? e.t - radius.micros : 0;
    const std::uint64_t hi = e.t + radius.micros;
    for (std::int64_t dy = -r; dy <= r && support < k; ++dy) {
      for (std::int64_t dx = -r; dx <= r && support < k; ++dx) {
        if (static_cast<double>(dx * dx + dy * dy) > r2) continue;
        const std::int64_t x = static_cast<std::int64_t>(e.x) + dx, y = static_cast<std::int64_t>(e.y) + dy;
        if (x < 0 || y < 0) continue;
        auto it = by_pixel.find(key(x, y));
        if (it == by_pixel.end()) continue;
        const auto& ts = it->second;
        support += static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), hi) -
                                            std::lower_bound(ts.begin(), ts.end(), lo));
      }
    }
    e.label = support >= k ? 0 : 1;
  }
  return result;
}

}  // namespace evderain
