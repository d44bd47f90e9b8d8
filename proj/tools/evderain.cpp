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


#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evderain/app.hpp"

namespace fs = std::filesystem;
using namespace evderain;

namespace {

EventFormat parse_format(const std::string& s) {
  if (s == "csv") return EventFormat::csv;
  if (s == "bin" || s == "binary") return EventFormat::binary;
  throw ConfigError("unknown format '" + s + "' (csv, bin)");
}

BackgroundMode parse_background(const std::string& s) {
  if (s == "static-edges") return BackgroundMode::static_edges;
  if (s == "moving-bar") return BackgroundMode::moving_bar;
  if (s == "loaded-file") return BackgroundMode::loaded_file;
  throw ConfigError("unknown background '" + s + "' (static-edges, moving-bar, loaded-file)");
}

app::LabelOrder parse_order(const std::string& s) {
  if (s == "serialized") return app::LabelOrder::serialized;
  if (s == "time") return app::LabelOrder::time;
  throw ConfigError("unknown order '" + s + "' (serialized, time)");
}

template <typename T>
void override_if(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Rain removal for event camera streams"};
  cli.require_subcommand(1);
  std::string out = ".";

  // generate
  auto* gen = cli.add_subcommand("generate", "Synthesize labeled rainy event streams");
  std::string gen_config;
  std::optional<double> intensity, duration;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> count;
  std::optional<std::uint16_t> gen_width, gen_height;
  std::string background, background_file, gen_format, prefix;
  bool paired = false;
  gen->add_option("--config", gen_config, "JSON with scene, rain, count, format, paired, prefix");
  gen->add_option("--intensity", intensity, "Rain intensity in mm/hr");
  gen->add_option("--seed", gen_seed, "Seed of the first sequence");
  gen->add_option("--count", count, "Number of sequences");
  gen->add_option("--duration", duration, "Sequence duration in seconds");
  gen->add_option("--width", gen_width, "Sensor width");
  gen->add_option("--height", gen_height, "Sensor height");
  gen->add_option("--background", background, "static-edges, moving-bar or loaded-file");
  gen->add_option("--background-file", background_file, "Event file for loaded-file backgrounds");
  gen->add_option("--format", gen_format, "csv or bin");
  gen->add_option("--prefix", prefix, "Output file name prefix");
  gen->add_flag("--paired", paired, "Also write the rain-free stream");
  gen->add_option("--out", out, "Output directory");

  // label
  auto* lab = cli.add_subcommand("label", "KNN-label a rainy recording against its clean pair");
  app::LabelOptions label_opts;
  lab->add_option("--rainy", label_opts.rainy, "Rainy event file")->required();
  lab->add_option("--clean", label_opts.clean, "Clean event file")->required();
  lab->add_option("--k", label_opts.k, "Clean neighbors needed for background");
  lab->add_option("--radius-px", label_opts.radius.pixels, "Spatial radius in pixels");
  lab->add_option("--radius-us", label_opts.radius.micros, "Temporal radius in microseconds");
  lab->add_option("--out", out, "Output directory");

  // train
  auto* tr = cli.add_subcommand("train", "Train the network");
  std::string train_config, resume;
  std::optional<std::size_t> epochs, max_steps, batch_size;
  std::optional<double> lr;
  std::optional<std::uint64_t> train_seed;
  bool quiet = false;
  tr->add_option("--config", train_config, "Run config JSON")->required();
  tr->add_option("--resume", resume, "Checkpoint to resume from");
  tr->add_option("--epochs", epochs);
  tr->add_option("--max-steps", max_steps);
  tr->add_option("--batch-size", batch_size);
  tr->add_option("--lr", lr);
  tr->add_option("--seed", train_seed);
  tr->add_flag("--quiet", quiet, "Do not print per-step losses");
  tr->add_option("--out", out, "Output directory, default checkpoint_dir from the config");

  // infer
  auto* inf = cli.add_subcommand("infer", "Predict per-event labels");
  std::string checkpoint, method = "model", filters_path;
  std::vector<std::string> infer_inputs;
  inf->add_option("inputs", infer_inputs, "Event files")->required();
  inf->add_option("--checkpoint", checkpoint, "Model checkpoint (method model)");
  inf->add_option("--method", method, "model, ts or density");
  inf->add_option("--filters", filters_path, "Filter config JSON (methods ts, density)");
  inf->add_option("--out", out, "Output directory");

  // eval
  auto* ev = cli.add_subcommand("eval", "Score predictions against labeled events");
  std::vector<std::string> pred_files, label_files;
  ev->add_option("--pred", pred_files, "Prediction CSV files")->required();
  ev->add_option("--labels", label_files, "Labeled event files, paired with --pred by position")->required();
  ev->add_option("--out", out, "Output directory");

  // spectrum
  auto* sp = cli.add_subcommand("spectrum", "Power spectrum and run lengths of label sequences");
  app::SpectrumOptions spec_opts;
  std::vector<std::string> spec_inputs;
  std::string order = "serialized", scan = "zorder";
  sp->add_option("inputs", spec_inputs, "Labeled event files")->required();
  sp->add_option("--bins", spec_opts.bins, "Frequency bins");
  sp->add_option("--order", order, "serialized or time");
  sp->add_option("--scan-mode", scan, "Scan mode for serialized order");
  sp->add_option("--grid-bits", spec_opts.grid_bits, "Bits per curve axis");
  sp->add_option("--window-duration", spec_opts.window_duration, "Seconds");
  sp->add_option("--windows", spec_opts.num_windows);
  sp->add_option("--width", spec_opts.sensor_width);
  sp->add_option("--height", spec_opts.sensor_height);
  sp->add_option("--out", out, "Output directory");

  // bench-scan
  auto* bn = cli.add_subcommand("bench-scan", "Time the scan kernel at several lengths");
  app::BenchOptions bench_opts;
  bn->add_option("--length,--lengths", bench_opts.lengths, "Sequence lengths, comma separated")->delimiter(',');
  bn->add_option("--repeats", bench_opts.repeats);
  bn->add_option("--channels", bench_opts.channels);
  bn->add_option("--states", bench_opts.states);
  bn->add_option("--block", bench_opts.block, "Block length, 0 for the sequential kernel");
  bn->add_option("--seed", bench_opts.seed);
  bn->add_option("--out", out, "Output directory");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    std::cerr << "error kind=usage exit=" << app::kUsage << " msg=\"" << e.what() << "\"\n";
    return app::kUsage;
  }

  try {
    const auto env_seed = app::seed_from_env();
    if (gen->parsed()) {
      app::GenerateOptions o;
      if (!gen_config.empty()) app::apply_generate_config(o, app::read_json_file(gen_config));
      override_if(intensity, o.rain.intensity);
      override_if(duration, o.scene.duration);
      override_if(count, o.count);
      override_if(gen_width, o.scene.width);
      override_if(gen_height, o.scene.height);
      if (env_seed) o.rain.seed = *env_seed;
      override_if(gen_seed, o.rain.seed);
      if (!background.empty()) o.scene.background = parse_background(background);
      if (!background_file.empty()) o.scene.background_file = background_file;
      if (!gen_format.empty()) o.format = parse_format(gen_format);
      if (!prefix.empty()) o.prefix = prefix;
      if (paired) o.paired = true;
      o.out = out;
      for (const auto& p : app::cmd_generate(o)) std::cout << p.string() << "\n";
    } else if (lab->parsed()) {
      label_opts.out = out;
      const auto r = app::cmd_label(label_opts);
      if (r.clean_stream_empty) std::cerr << "warning kind=empty_clean_stream msg=\"every event labeled rain\"\n";
      std::cout << r.path.string() << " rain=" << r.rain << " background=" << r.background << "\n";
    } else if (tr->parsed()) {
      app::TrainOptions o;
      o.run = load_run_config(train_config);
      override_if(epochs, o.run.optimizer.epochs);
      override_if(max_steps, o.run.optimizer.max_steps);
      override_if(batch_size, o.run.optimizer.batch_size);
      override_if(lr, o.run.optimizer.lr);
      if (env_seed) o.run.seed = *env_seed;
      override_if(train_seed, o.run.seed);
      validate(o.run);
      if (!resume.empty()) o.resume = fs::path(resume);
      o.out = tr->count("--out") == 0 && !o.run.checkpoint_dir.empty() ? o.run.checkpoint_dir : fs::path(out);
      if (!quiet) {
        o.on_step = [](const StepRecord& r) {
          std::printf("step %zu epoch %zu lr %.3g ce %.6f fft %.6f total %.6f (%.2fs)\n", r.step, r.epoch, r.lr,
                      r.ce, r.fft, r.total, r.wall_seconds);
          std::fflush(stdout);
        };
      }
      std::cout << app::cmd_train(o).string() << "\n";
    } else if (inf->parsed()) {
      app::InferOptions o;
      o.method = app::parse_method(method);
      if (o.method == app::Method::model && checkpoint.empty()) throw ConfigError("--checkpoint is required");
      o.checkpoint = checkpoint;
      if (!filters_path.empty()) o.filters = filter_config_from_json(app::read_json_file(filters_path));
      for (const auto& s : infer_inputs) o.inputs.emplace_back(s);
      o.out = out;
      for (const auto& p : app::cmd_infer(o)) std::cout << p.string() << "\n";
    } else if (ev->parsed()) {
      app::EvalOptions o;
      for (const auto& s : pred_files) o.predictions.emplace_back(s);
      for (const auto& s : label_files) o.labels.emplace_back(s);
      o.out = out;
      std::cout << to_json(app::cmd_eval(o)).dump() << "\n";
    } else if (sp->parsed()) {
      spec_opts.order = parse_order(order);
      spec_opts.scan = parse_scan_mode(scan);
      for (const auto& s : spec_inputs) spec_opts.inputs.emplace_back(s);
      spec_opts.out = out;
      const auto spectra = app::cmd_spectrum(spec_opts);
      for (std::size_t i = 0; i < spectra.size(); ++i) {
        std::printf("%s peak_frequency=%.6f median_run_length=%.3f\n", spec_opts.inputs[i].string().c_str(),
                    spectra[i].peak_frequency, spectra[i].median_run_length());
      }
    } else if (bn->parsed()) {
      bench_opts.out = out;
      for (const auto& t : app::cmd_bench(bench_opts)) std::printf("%zu,%.9f\n", t.length, t.seconds);
    }
  } catch (const Error& e) {
    std::cerr << app::error_line(e) << "\n";
    return app::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal exit=" << app::kFailure << " msg=\"" << e.what() << "\"\n";
    return app::kFailure;
  }
  return app::kOk;
}
