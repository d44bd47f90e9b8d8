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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evderain/baselines.hpp"
#include "evderain/curves.hpp"
#include "evderain/errors.hpp"
#include "evderain/events.hpp"
#include "evderain/loss_metrics.hpp"
#include "evderain/raingen.hpp"
#include "evderain/train.hpp"

namespace evderain::app {

/// Process exit status for a library error kind.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kMissingFile = 3,
  kBadConfig = 4,
  kCheckpointMismatch = 5,
  kBadData = 6,
  kUndefinedMetric = 7,
  kFailure = 8,
};

int exit_code_for(const Error& error);
/// One line: `error kind=<kind> exit=<code> msg="<message>"`.
std::string error_line(const Error& error);

/// Reads EVDERAIN_SEED; throws ConfigError when set but not an unsigned integer.
std::optional<std::uint64_t> seed_from_env();

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

struct GenerateOptions {
  SceneParams scene;
  RainParams rain;
  std::size_t count = 1;  // sequence i uses seed rain.seed + i
  EventFormat format = EventFormat::csv;
  bool paired = false;    // also write the rain-free stream as <name>_clean
  std::string prefix = "seq";
  std::filesystem::path out = ".";
};

/// Accepts {"scene": {...}, "rain": {...}, "count", "format", "paired", "prefix"}.
void apply_generate_config(GenerateOptions& options, const nlohmann::json& j);
std::vector<std::filesystem::path> cmd_generate(const GenerateOptions& options);

struct LabelOptions {
  std::filesystem::path rainy;
  std::filesystem::path clean;
  std::size_t k = 2;
  KnnRadius radius;
  std::filesystem::path out = ".";
};

struct LabelOutcome {
  std::filesystem::path path;
  std::size_t rain = 0;
  std::size_t background = 0;
  bool clean_stream_empty = false;
};

/// Writes the rainy stream with KNN labels to out/<rainy file name>.
LabelOutcome cmd_label(const LabelOptions& options);

struct TrainOptions {
  RunConfig run;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> resume;
  /// Called after every step with the logged record.
  std::function<void(const StepRecord&)> on_step;
};

/// Writes out/train_log.jsonl (appended), out/checkpoint_step_<n>.evck at
/// every epoch end and out/model.evck at the end. Returns the final path.
std::filesystem::path cmd_train(const TrainOptions& options);

enum class Method { model, ts_filter, density_filter };
Method parse_method(const std::string& name);

struct InferOptions {
  Method method = Method::model;
  std::filesystem::path checkpoint;       // model only
  std::optional<FilterConfig> filters;    // filters only; defaults otherwise
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out = ".";
};

std::string predictions_csv(std::span<const std::uint8_t> predictions);
/// Parses `index,label` rows; indices must run 0, 1, 2, ...
std::vector<std::uint8_t> read_predictions(const std::filesystem::path& path);

/// Writes out/<input stem>.pred.csv per input.
std::vector<std::filesystem::path> cmd_infer(const InferOptions& options);

struct EvalOptions {
  std::vector<std::filesystem::path> predictions;
  std::vector<std::filesystem::path> labels;  // labeled event files, paired by position
  std::filesystem::path out = ".";
};

/// Writes out/report.json with the aggregate and per-file reports. When the
/// aggregate is undefined the partial report is still written, then
/// UndefinedMetricError propagates.
EvalReport cmd_eval(const EvalOptions& options);

enum class LabelOrder { serialized, time };

struct SpectrumOptions {
  std::vector<std::filesystem::path> inputs;
  std::size_t bins = 32;
  LabelOrder order = LabelOrder::serialized;
  ScanMode scan = ScanMode::zorder;
  unsigned grid_bits = 10;
  double window_duration = 0.1;
  std::size_t num_windows = 5;
  std::uint16_t sensor_width = 160;
  std::uint16_t sensor_height = 120;
  std::filesystem::path out = ".";
};

/// Labels of a labeled stream in the requested order.
std::vector<std::uint8_t> ordered_labels(std::span<const Event> events, const SpectrumOptions& options);

/// Writes out/<stem>.spectrum.csv, out/<stem>.runs.csv and
/// out/<stem>.spectrum.json (peak frequency, median run length) per input.
std::vector<LabelSpectrum> cmd_spectrum(const SpectrumOptions& options);

struct BenchOptions {
  std::vector<std::size_t> lengths{100000, 200000};
  std::size_t repeats = 5;
  std::size_t channels = 4;
  std::size_t states = 8;
  std::size_t block = 0;  // 0 runs the sequential kernel
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
};

struct ScanTiming {
  std::size_t length = 0;
  double seconds = 0.0;  // median over repeats
};

std::vector<ScanTiming> bench_scan(const BenchOptions& options);
/// bench_scan() then out/bench_scan.csv with header `length,seconds`.
std::vector<ScanTiming> cmd_bench(const BenchOptions& options);

}  // namespace evderain::app
