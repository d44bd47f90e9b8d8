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


#include "evderain/events.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "evderain/errors.hpp"

namespace evderain {

namespace {

constexpr std::array<char, 4> kBinaryMagic{'E', 'V', 'D', '1'};
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 14;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* name) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(line, std::string("bad ") + name + " field '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = row.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(row.substr(start));
      break;
    }
    out.push_back(row.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

EventStream read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  EventStream stream;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = trim(line);
    if (row.empty()) continue;
    auto fields = split_commas(row);
    if (columns == 0) {
      if (trim(fields[0]) == "x") {
        columns = fields.size();
        if (columns != 4 && columns != 5) throw ParseError(line_no, "expected header x,y,t,p[,label]");
        continue;
      }
      columns = fields.size();
    }
    if (fields.size() != columns) {
      throw ParseError(line_no, "expected " + std::to_string(columns) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    if (columns != 4 && columns != 5) throw ParseError(line_no, "expected 4 or 5 fields");
    Event e;
    e.x = parse_field<std::uint32_t>(fields[0], line_no, "x");
    e.y = parse_field<std::uint32_t>(fields[1], line_no, "y");
    e.t = parse_field<std::uint64_t>(fields[2], line_no, "t");
    const int p = parse_field<int>(fields[3], line_no, "p");
    if (p != 1 && p != -1) throw ParseError(line_no, "polarity must be -1 or 1");
    e.p = static_cast<std::int8_t>(p);
    if (columns == 5 && !trim(fields[4]).empty()) {
      const int label = parse_field<int>(fields[4], line_no, "label");
      if (label != 0 && label != 1) throw ParseError(line_no, "label must be 0 or 1");
      e.label = static_cast<std::uint8_t>(label);
    }
    if (!stream.events.empty() && e.t < stream.events.back().t) {
      throw ValidationError("unsorted timestamps at line " + std::to_string(line_no));
    }
    stream.events.push_back(e);
  }
  return stream;
}

template <typename T>
T read_le(const unsigned char* p) {
  std::make_unsigned_t<T> v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::make_unsigned_t<T>>(p[i]) << (8 * i);
  }
  return static_cast<T>(v);
}

template <typename T>
void write_le(std::string& out, T value) {
  auto v = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

EventStream read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EventStream stream;
  if (bytes.empty()) return stream;
  if (bytes.size() < kHeaderBytes || !std::equal(kBinaryMagic.begin(), kBinaryMagic.end(), bytes.begin())) {
    throw ParseError(0, "missing EVD1 header");
  }
  const auto width = read_le<std::uint16_t>(&bytes[4]);
  const auto height = read_le<std::uint16_t>(&bytes[6]);
  const auto count = read_le<std::uint64_t>(&bytes[8]);
  if (bytes.size() != kHeaderBytes + count * kRecordBytes) {
    throw ParseError(0, "record count " + std::to_string(count) + " does not match file size");
  }
  stream.width = width;
  stream.height = height;
  stream.events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const unsigned char* rec = &bytes[kHeaderBytes + i * kRecordBytes];
    Event e;
    e.x = read_le<std::uint16_t>(rec);
    e.y = read_le<std::uint16_t>(rec + 2);
    e.t = read_le<std::uint64_t>(rec + 4);
    const auto p = read_le<std::int8_t>(rec + 12);
    const auto label = read_le<std::int8_t>(rec + 13);
    // Records are numbered from 1 so errors read like CSV line numbers.
    if (p != 1 && p != -1) throw ParseError(i + 1, "polarity must be -1 or 1");
    if (label < -1 || label > 1) throw ParseError(i + 1, "label must be -1, 0 or 1");
    e.p = p;
    if (label >= 0) e.label = static_cast<std::uint8_t>(label);
    if ((width && e.x >= width) || (height && e.y >= height)) {
      throw ValidationError("record " + std::to_string(i + 1) + " lies outside the sensor");
    }
    if (!stream.events.empty() && e.t < stream.events.back().t) {
      throw ValidationError("unsorted timestamps at record " + std::to_string(i + 1));
    }
    stream.events.push_back(e);
  }
  return stream;
}

}  // namespace

std::size_t EventCloud4D::size() const noexcept {
  std::size_t n = 0;
  for (const auto& w : windows) n += w.events.size();
  return n;
}

EventFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".evd") ? EventFormat::binary : EventFormat::csv;
}

EventStream read_stream(const std::filesystem::path& path, EventFormat format) {
  if (!std::filesystem::exists(path)) throw MissingFileError(path.string());
  return format == EventFormat::csv ? read_csv(path) : read_binary(path);
}

std::vector<Event> load_events(const std::filesystem::path& path, EventFormat format) {
  return read_stream(path, format).events;
}

void save_events(const std::filesystem::path& path, std::span<const Event> events, EventFormat format,
                 std::uint16_t width, std::uint16_t height) {
  std::string out;
  if (format == EventFormat::csv) {
    out = "x,y,t,p,label\n";
    for (const auto& e : events) {
      out += std::to_string(e.x) + ',' + std::to_string(e.y) + ',' + std::to_string(e.t) + ',' +
             std::to_string(static_cast<int>(e.p)) + ',' +
             (e.label ? std::to_string(static_cast<int>(*e.label)) : std::string()) + '\n';
    }
  } else {
    out.reserve(kHeaderBytes + events.size() * kRecordBytes);
    out.append(kBinaryMagic.begin(), kBinaryMagic.end());
    write_le<std::uint16_t>(out, width);
    write_le<std::uint16_t>(out, height);
    write_le<std::uint64_t>(out, events.size());
    for (const auto& e : events) {
      if (e.x > 0xFFFF || e.y > 0xFFFF) throw RangeError("coordinate does not fit the binary format");
      write_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.x));
      write_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.y));
      write_le<std::uint64_t>(out, e.t);
      write_le<std::int8_t>(out, e.p);
      write_le<std::int8_t>(out, e.label ? static_cast<std::int8_t>(*e.label) : std::int8_t{-1});
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("io", "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void check_sorted(std::span<const Event> events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].t < events[i - 1].t) {
      throw ValidationError("unsorted timestamps at event " + std::to_string(i));
    }
  }
}

std::uint64_t window_duration_us(double window_duration) {
  if (!(window_duration > 0.0)) throw ContractError("window duration must be positive");
  const auto us = static_cast<std::uint64_t>(std::llround(window_duration * 1e6));
  if (us == 0) throw ContractError("window duration is shorter than one microsecond");
  return us;
}

EventCloud4D build_cloud(std::span<const Event> events, double window_duration, std::size_t num_windows,
                         std::uint32_t sensor_width, std::uint32_t sensor_height) {
  if (num_windows == 0) throw ContractError("need at least one window");
  const std::uint64_t span_us = window_duration_us(window_duration);
  if (events.empty()) throw EmptyCloudError("cannot build a cloud from zero events");
  check_sorted(events);

  EventCloud4D cloud;
  cloud.window_duration = window_duration;
  cloud.windows.resize(num_windows);
  const std::uint64_t t_first = events.front().t;
  for (std::size_t k = 0; k < num_windows; ++k) {
    auto& w = cloud.windows[k];
    w.index = k;
    w.t0 = t_first + k * span_us;
    w.te = w.t0 + span_us;
  }
  std::uint32_t max_x = 0;
  std::uint32_t max_y = 0;
  for (const auto& e : events) {
    const std::uint64_t offset = e.t - t_first;
    std::size_t k = static_cast<std::size_t>(offset / span_us);
    if (k == num_windows && offset == num_windows * span_us) k = num_windows - 1;
    if (k >= num_windows) {
      ++cloud.dropped_events;
      continue;
    }
    auto& w = cloud.windows[k];
    w.events.push_back(e);
    w.z.push_back(static_cast<double>(e.t - w.t0) / static_cast<double>(w.te - w.t0));
    max_x = std::max(max_x, e.x);
    max_y = std::max(max_y, e.y);
  }
  cloud.sensor_width = sensor_width ? sensor_width : max_x + 1;
  cloud.sensor_height = sensor_height ? sensor_height : max_y + 1;
  for (const auto& w : cloud.windows) {
    for (const auto& e : w.events) {
      if (e.x >= cloud.sensor_width || e.y >= cloud.sensor_height) {
        throw ValidationError("event (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                              ") lies outside the sensor");
      }
    }
  }
  return cloud;
}

std::vector<EventCloud4D> split_clouds(std::span<const Event> events, double window_duration,
                                       std::size_t num_windows, std::uint32_t sensor_width,
                                       std::uint32_t sensor_height) {
  std::vector<EventCloud4D> clouds;
  std::size_t start = 0;
  while (start < events.size()) {
    auto cloud = build_cloud(events.subspan(start), window_duration, num_windows, sensor_width, sensor_height);
    const std::size_t used = cloud.size();
    cloud.dropped_events = 0;
    clouds.push_back(std::move(cloud));
    start += used;
  }
  return clouds;
}

std::vector<CloudPoint> flatten(const EventCloud4D& cloud) {
  std::vector<CloudPoint> out;
  out.reserve(cloud.size());
  for (const auto& w : cloud.windows) {
    for (std::size_t i = 0; i < w.events.size(); ++i) {
      const auto& e = w.events[i];
      out.push_back(CloudPoint{e.x, e.y, w.z[i], static_cast<std::uint32_t>(w.index), e.p, e.label, e.t});
    }
  }
  return out;
}

}  // namespace evderain
