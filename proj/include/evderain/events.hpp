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
#include <optional>
#include <span>
#include <vector>

namespace evderain {

/// One camera event. `label` is 0 for background/signal and 1 for rain.
struct Event {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint64_t t = 0;  // microseconds
  std::int8_t p = 1;    // -1 or +1
  std::optional<std::uint8_t> label;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class EventFormat { csv, binary };

/// Events plus the sensor geometry when the file format carries it.
struct EventStream {
  std::vector<Event> events;
  std::optional<std::uint16_t> width;
  std::optional<std::uint16_t> height;
};

struct EventWindow {
  std::size_t index = 0;  // global window ordinal
  std::uint64_t t0 = 0;
  std::uint64_t te = 0;
  std::vector<Event> events;
  std::vector<double> z;  // (t - t0) / (te - t0), one per event
};

struct EventCloud4D {
  std::vector<EventWindow> windows;
  std::uint32_t sensor_width = 0;
  std::uint32_t sensor_height = 0;
  double window_duration = 0.0;  // seconds
  std::size_t dropped_events = 0;

  std::size_t size() const noexcept;
  bool empty() const noexcept { return size() == 0; }
};

/// One point of the flattened 4D cloud.
struct CloudPoint {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  double z = 0.0;
  std::uint32_t window = 0;  // T_n
  std::int8_t p = 1;
  std::optional<std::uint8_t> label;
  std::uint64_t t = 0;
};

EventFormat format_from_path(const std::filesystem::path& path);

/// Throws MissingFileError, ParseError (with line number) or ValidationError
/// when timestamps decrease.
std::vector<Event> load_events(const std::filesystem::path& path, EventFormat format);
EventStream read_stream(const std::filesystem::path& path, EventFormat format);

void save_events(const std::filesystem::path& path, std::span<const Event> events,
                 EventFormat format, std::uint16_t width = 0, std::uint16_t height = 0);

/// Throws ValidationError if `t` is not non-decreasing.
void check_sorted(std::span<const Event> events);

/// Partitions `events` into `num_windows` windows of `window_duration` seconds
/// starting at the first timestamp. Intervals are half-open except the last,
/// which also takes events at exactly t_first + L*T. Later events are dropped
/// and counted in `dropped_events`. Throws EmptyCloudError for no events.
EventCloud4D build_cloud(std::span<const Event> events, double window_duration,
                         std::size_t num_windows, std::uint32_t sensor_width = 0,
                         std::uint32_t sensor_height = 0);

/// Splits a whole stream into consecutive clouds of `num_windows` windows so
/// that every event lands in exactly one cloud.
std::vector<EventCloud4D> split_clouds(std::span<const Event> events, double window_duration,
                                       std::size_t num_windows, std::uint32_t sensor_width,
                                       std::uint32_t sensor_height);

/// Windows concatenated in ascending T_n, time order preserved inside each.
std::vector<CloudPoint> flatten(const EventCloud4D& cloud);

/// Window duration in integer microseconds; throws ContractError if not > 0.
std::uint64_t window_duration_us(double window_duration);

}  // namespace evderain
