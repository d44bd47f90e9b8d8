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


#include "evderain/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "evderain/autodiff/checkpoint.hpp"
#include "evderain/ssm.hpp"

namespace evderain::app {

namespace fs = std::filesystem;

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

std::string extension_for(EventFormat format) { return format == EventFormat::binary ? ".bin" : ".csv"; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io", "cannot create directory " + dir.string() + ": " + ec.message());
}

void refuse_overwrite(const fs::path& input, const fs::path& output) {
  std::error_code ec;
  if (fs::exists(output) && fs::equivalent(input, output, ec)) {
    throw ContractError("refusing to overwrite input " + input.string());
  }
}

std::vector<Event> load(const fs::path& path) {
  if (!fs::exists(path)) throw MissingFileError(path.string());
  return load_events(path, format_from_path(path));
}

std::string json_line(const nlohmann::json& j) { return j.dump() + "\n"; }

void append_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw Error("io", "cannot append to " + path.string());
  out << text;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

int exit_code_for(const Error& error) {
  const auto& k = error.kind();
  if (k == "missing_file") return kMissingFile;
  if (k == "config") return kBadConfig;
  if (k == "checkpoint") return kCheckpointMismatch;
  if (k == "parse" || k == "validation" || k == "range" || k == "empty_cloud") return kBadData;
  if (k == "undefined_metric") return kUndefinedMetric;
  return kFailure;
}

std::string error_line(const Error& error) {
  return "error kind=" + error.kind() + " exit=" + std::to_string(exit_code_for(error)) + " msg=\"" +
         escape(error.what()) + "\"";
}

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("EVDERAIN_SEED");
  if (!raw || !*raw) return std::nullopt;
  const std::string s(raw);
  if (!std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }) || s.size() > 20) {
    throw ConfigError("EVDERAIN_SEED must be an unsigned integer, got '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("EVDERAIN_SEED out of range: '" + s + "'");
  }
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << text;
  if (!out) throw Error("io", "write failed for " + path.string());
}

void apply_generate_config(GenerateOptions& o, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("generate config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "scene") o.scene = scene_params_from_json(value);
      else if (key == "rain") o.rain = rain_params_from_json(value);
      else if (key == "count") o.count = value.get<std::size_t>();
      else if (key == "format") {
        const auto f = value.get<std::string>();
        if (f == "csv") o.format = EventFormat::csv;
        else if (f == "binary" || f == "bin") o.format = EventFormat::binary;
        else throw ConfigError("unknown format '" + f + "'");
      } else if (key == "paired") o.paired = value.get<bool>();
      else if (key == "prefix") o.prefix = value.get<std::string>();
      else throw ConfigError("unknown generate key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad generate value: ") + e.what());
  }
}

std::vector<fs::path> cmd_generate(const GenerateOptions& o) {
  validate(o.scene);
  validate(o.rain);
  if (o.count == 0) throw ConfigError("count must be >= 1");
  ensure_dir(o.out);
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < o.count; ++i) {
    RainParams rain = o.rain;
    rain.seed = o.rain.seed + i;
    std::ostringstream name;
    name << o.prefix << '_' << std::setw(4) << std::setfill('0') << i;
    const auto stream = generate(o.scene, rain);
    const fs::path path = o.out / (name.str() + extension_for(o.format));
    save_events(path, stream.events, o.format, o.scene.width, o.scene.height);
    written.push_back(path);
    if (o.paired) {
      RainParams dry = rain;
      dry.intensity = 0.0;
      const auto clean = generate(o.scene, dry);
      const fs::path clean_path = o.out / (name.str() + "_clean" + extension_for(o.format));
      save_events(clean_path, clean.events, o.format, o.scene.width, o.scene.height);
      written.push_back(clean_path);
    }
  }
  return written;
}

LabelOutcome cmd_label(const LabelOptions& o) {
  const auto rainy = load(o.rainy);
  const auto clean = load(o.clean);
  const auto result = knn_label(rainy, clean, o.k, o.radius);
  ensure_dir(o.out);
  LabelOutcome outcome;
  outcome.path = o.out / o.rainy.filename();
  refuse_overwrite(o.rainy, outcome.path);
  refuse_overwrite(o.clean, outcome.path);
  const auto format = format_from_path(outcome.path);
  std::uint16_t w = 0, h = 0;
  if (format == EventFormat::binary) {
    const auto s = read_stream(o.rainy, format);
    w = s.width.value_or(0);
    h = s.height.value_or(0);
  }
  save_events(outcome.path, result.events, format, w, h);
  for (const auto& e : result.events) (*e.label ? outcome.rain : outcome.background)++;
  outcome.clean_stream_empty = result.clean_stream_empty;
  return outcome;
}

fs::path cmd_train(const TrainOptions& o) {
  validate(o.run);
  check_paths(o.run);
  auto samples = load_samples(o.run.train_files, o.run);
  const auto val = load_samples(o.run.val_files, o.run);
  Trainer trainer(o.run, std::move(samples));
  if (o.resume) {
    const auto ck = ad::load_checkpoint(*o.resume);
    const auto saved = config_from_checkpoint(ck);
    if (to_json(saved.network) != to_json(o.run.network)) {
      throw CheckpointError("checkpoint network config differs from the run config");
    }
    trainer.resume(ck);
  }
  ensure_dir(o.out);
  const fs::path log = o.out / "train_log.jsonl";
  while (!trainer.finished()) {
    const auto rec = trainer.step();
    append_text(log, json_line(to_json(rec)));
    if (o.on_step) o.on_step(rec);
    if (rec.step % trainer.steps_per_epoch() == 0 || trainer.finished()) {
      const std::size_t epoch = (rec.step + trainer.steps_per_epoch() - 1) / trainer.steps_per_epoch();
      ad::save_checkpoint(o.out / ("checkpoint_step_" + std::to_string(rec.step) + ".evck"), trainer.checkpoint());
      if (!val.empty()) {
        nlohmann::json entry{{"epoch", epoch}, {"step", rec.step}};
        try {
          entry["val"] = to_json(evaluate_samples(val, o.run.network, trainer.params()));
        } catch (const UndefinedMetricError& e) {
          entry["val"] = to_json(e.report());
          entry["undefined"] = true;
        }
        append_text(log, json_line(entry));
      }
    }
  }
  const fs::path final_path = o.out / "model.evck";
  ad::save_checkpoint(final_path, trainer.checkpoint());
  return final_path;
}

Method parse_method(const std::string& name) {
  if (name == "model") return Method::model;
  if (name == "ts" || name == "ts-filter") return Method::ts_filter;
  if (name == "density" || name == "density-filter") return Method::density_filter;
  throw ConfigError("unknown method '" + name + "' (model, ts, density)");
}

std::string predictions_csv(std::span<const std::uint8_t> predictions) {
  std::string out = "index,label\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += predictions[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::vector<std::uint8_t> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::uint8_t> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "index,label") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(line_no, "expected index,label in " + path.string());
    const std::string idx = line.substr(0, comma), lab = line.substr(comma + 1);
    if (idx != std::to_string(out.size())) {
      throw ParseError(line_no, "prediction index " + idx + " out of sequence in " + path.string());
    }
    if (lab != "0" && lab != "1") throw ParseError(line_no, "prediction label must be 0 or 1 in " + path.string());
    out.push_back(lab == "1" ? 1 : 0);
  }
  return out;
}

std::vector<fs::path> cmd_infer(const InferOptions& o) {
  std::optional<RunConfig> run;
  ModelParams params;
  if (o.method == Method::model) {
    const auto ck = ad::load_checkpoint(o.checkpoint);
    run = config_from_checkpoint(ck);
    params = params_from_checkpoint(ck, run->network);
  }
  const FilterConfig filters = o.filters.value_or(FilterConfig{});
  ensure_dir(o.out);
  std::vector<fs::path> written;
  for (const auto& input : o.inputs) {
    const auto events = load(input);
    std::vector<std::uint8_t> pred;
    switch (o.method) {
      case Method::model: pred = predict_events(events, *run, params); break;
      case Method::ts_filter: pred = ts_filter(events, filters); break;
      case Method::density_filter: pred = density_filter(events, filters); break;
    }
    const fs::path path = o.out / (input.stem().string() + ".pred.csv");
    refuse_overwrite(input, path);
    write_text_file(path, predictions_csv(pred));
    written.push_back(path);
  }
  return written;
}

EvalReport cmd_eval(const EvalOptions& o) {
  if (o.predictions.size() != o.labels.size() || o.predictions.empty()) {
    throw ContractError("eval needs the same non-zero number of prediction and label files");
  }
  nlohmann::json files = nlohmann::json::array();
  std::vector<std::uint8_t> all_pred, all_labels;
  for (std::size_t i = 0; i < o.predictions.size(); ++i) {
    const auto pred = read_predictions(o.predictions[i]);
    const auto events = load(o.labels[i]);
    std::vector<std::uint8_t> labels;
    labels.reserve(events.size());
    for (const auto& e : events) {
      if (!e.label) throw ValidationError("unlabeled event in " + o.labels[i].string());
      labels.push_back(*e.label);
    }
    if (pred.size() != labels.size()) {
      throw ValidationError(o.predictions[i].string() + " has " + std::to_string(pred.size()) +
                            " predictions for " + std::to_string(labels.size()) + " events");
    }
    nlohmann::json entry{{"predictions", o.predictions[i].string()}, {"labels", o.labels[i].string()}};
    try {
      entry["report"] = to_json(evaluate(pred, labels));
    } catch (const UndefinedMetricError& e) {
      entry["report"] = to_json(e.report());
    }
    files.push_back(entry);
    all_pred.insert(all_pred.end(), pred.begin(), pred.end());
    all_labels.insert(all_labels.end(), labels.begin(), labels.end());
  }
  ensure_dir(o.out);
  const fs::path path = o.out / "report.json";
  try {
    const auto report = evaluate(all_pred, all_labels);
    write_text_file(path, nlohmann::json{{"aggregate", to_json(report)}, {"files", files}}.dump(2) + "\n");
    return report;
  } catch (const UndefinedMetricError& e) {
    write_text_file(path, nlohmann::json{{"aggregate", to_json(e.report())}, {"files", files}}.dump(2) + "\n");
    throw;
  }
}

std::vector<std::uint8_t> ordered_labels(std::span<const Event> events, const SpectrumOptions& o) {
  std::vector<std::uint8_t> out;
  out.reserve(events.size());
  auto label_of = [](const std::optional<std::uint8_t>& l) {
    if (!l) throw ValidationError("spectrum needs labeled events");
    return *l;
  };
  if (o.order == LabelOrder::time) {
    for (const auto& e : events) out.push_back(label_of(e.label));
    return out;
  }
  for (const auto& cloud : split_clouds(events, o.window_duration, o.num_windows, o.sensor_width, o.sensor_height)) {
    const auto flat = flatten(cloud);
    const auto serialized = serialize(cloud, o.scan, o.grid_bits);
    for (const std::size_t i : serialized.order) out.push_back(label_of(flat[i].label));
  }
  return out;
}

std::vector<LabelSpectrum> cmd_spectrum(const SpectrumOptions& o) {
  ensure_dir(o.out);
  std::vector<LabelSpectrum> out;
  for (const auto& input : o.inputs) {
    const auto events = load(input);
    const auto spectrum = label_spectrum(ordered_labels(events, o), o.bins);
    const std::string stem = input.stem().string();
    write_text_file(o.out / (stem + ".spectrum.csv"), spectrum_csv(spectrum));
    write_text_file(o.out / (stem + ".runs.csv"), run_length_csv(spectrum));
    const nlohmann::json summary{{"input", input.string()},
                                 {"events", events.size()},
                                 {"peak_frequency", spectrum.peak_frequency},
                                 {"median_run_length", spectrum.median_run_length()}};
    write_text_file(o.out / (stem + ".spectrum.json"), summary.dump(2) + "\n");
    out.push_back(spectrum);
  }
  return out;
}

std::vector<ScanTiming> bench_scan(const BenchOptions& o) {
  if (o.repeats == 0 || o.channels == 0 || o.states == 0) throw ConfigError("bench sizes must be >= 1");
  std::vector<ScanTiming> out;
  std::mt19937_64 engine(o.seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine() >> 11) * 0x1.0p-53;
  };
  for (const std::size_t L : o.lengths) {
    if (L == 0) throw ConfigError("bench lengths must be >= 1");
    const std::size_t C = o.channels, N = o.states;
    std::vector<double> x(C * L), delta(C * L), a(C * N), b(N * L), c(N * L), d(C);
    for (auto& v : x) v = uniform(-1.0, 1.0);
    for (auto& v : delta) v = uniform(0.001, 0.1);
    for (auto& v : a) v = -uniform(0.5, 2.0);
    for (auto& v : b) v = uniform(-1.0, 1.0);
    for (auto& v : c) v = uniform(-1.0, 1.0);
    for (auto& v : d) v = uniform(-1.0, 1.0);
    const ssm::ScanView view{C, L, N, x, delta, a, b, c, d};
    std::vector<double> times;
    double sink = 0.0;
    for (std::size_t r = 0; r < o.repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const auto y = o.block ? ssm::scan_blocked(view, o.block) : ssm::scan_reference(view);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      sink += y.back();
    }
    if (!std::isfinite(sink)) throw NumericError(0, "bench scan produced non-finite output");
    std::sort(times.begin(), times.end());
    out.push_back({L, times[times.size() / 2]});
  }
  return out;
}

std::vector<ScanTiming> cmd_bench(const BenchOptions& o) {
  const auto timings = bench_scan(o);
  std::string csv = "length,seconds\n";
  for (const auto& t : timings) csv += std::to_string(t.length) + "," + format_double(t.seconds) + "\n";
  write_text_file(o.out / "bench_scan.csv", csv);
  return timings;
}

}  // namespace evderain::app
