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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evderain/autodiff/checkpoint.hpp"
#include "evderain/baselines.hpp"
#include "evderain/events.hpp"
#include "evderain/loss_metrics.hpp"
#include "evderain/model.hpp"

namespace evderain {

struct OptimizerConfig {
  double lr = 4.8e-4;
  double min_lr = 1e-5;
  double weight_decay = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 50;
  std::size_t batch_size = 6;
  /// Overrides epochs when non-zero.
  std::size_t max_steps = 0;
};

struct RunConfig {
  std::vector<std::filesystem::path> train_files;
  std::vector<std::filesystem::path> val_files;
  std::vector<std::filesystem::path> test_files;
  std::filesystem::path checkpoint_dir;
  OptimizerConfig optimizer;
  NetworkConfig network;
  LossConfig loss;
  double window_duration = 0.1;  // seconds
  std::size_t num_windows = 5;
  std::uint16_t sensor_width = 160;
  std::uint16_t sensor_height = 120;
  std::uint64_t seed = 0;
  FilterConfig filters;
};

void validate(const RunConfig& cfg);
/// Throws MissingFileError for the first data file that does not exist.
void check_paths(const RunConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);
/// Rejects unknown keys with ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// One cloud with its labels in flatten order.
struct Sample {
  EventCloud4D cloud;
  std::vector<std::uint8_t> labels;
};

/// Splits labeled events into clouds of the configured window layout.
/// Throws ValidationError if any event is unlabeled.
std::vector<Sample> make_samples(std::span<const Event> events, const RunConfig& cfg);
std::vector<Sample> load_samples(std::span<const std::filesystem::path> files, const RunConfig& cfg);

/// Decoupled-weight-decay Adam over the non-buffer tensors of a model.
class AdamW {
 public:
  explicit AdamW(OptimizerConfig cfg) : cfg_(cfg) {}
  void step(ModelParams& params, double lr);
  std::size_t steps_taken() const noexcept { return t_; }

  void save(ad::Checkpoint& checkpoint) const;
  void load(const ad::Checkpoint& checkpoint, const ModelParams& params);

 private:
  OptimizerConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

/// Cosine decay from lr to min_lr over `total` steps.
double cosine_lr(const OptimizerConfig& cfg, std::size_t step, std::size_t total);

struct StepRecord {
  std::size_t step = 0;  // 1-based, after the update
  std::size_t epoch = 0;
  double lr = 0.0;
  double ce = 0.0;
  double fft = 0.0;
  double total = 0.0;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const StepRecord& record);

class Trainer {
 public:
  Trainer(RunConfig cfg, std::vector<Sample> samples);

  /// Restores parameters, optimizer moments and the step counter.
  void resume(const ad::Checkpoint& checkpoint);
  ad::Checkpoint checkpoint() const;

  /// One optimizer update over the next batch; gradients are averaged over
  /// the batch's samples.
  StepRecord step();
  std::size_t steps_done() const noexcept { return optimizer_.steps_taken(); }
  std::size_t total_steps() const noexcept { return total_steps_; }
  std::size_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
  bool finished() const noexcept { return steps_done() >= total_steps_; }

  const ModelParams& params() const noexcept { return params_; }
  const RunConfig& config() const noexcept { return cfg_; }

 private:
  std::vector<std::size_t> batch_indices(std::size_t step) const;

  RunConfig cfg_;
  std::vector<Sample> samples_;
  ModelParams params_;
  AdamW optimizer_;
  std::size_t steps_per_epoch_ = 0;
  std::size_t total_steps_ = 0;
};

/// Sample order for an epoch, a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n);

/// Checkpoint layout: "param/<path>", "adam.m/<path>", "adam.v/<path>";
/// meta holds the run config and step.
ModelParams params_from_checkpoint(const ad::Checkpoint& checkpoint, const NetworkConfig& cfg);
RunConfig config_from_checkpoint(const ad::Checkpoint& checkpoint);

/// Per-event predictions in stream order.
std::vector<std::uint8_t> predict_events(std::span<const Event> events, const RunConfig& cfg,
                                         const ModelParams& params);

/// Aggregated over all samples.
EvalReport evaluate_samples(std::span<const Sample> samples, const NetworkConfig& cfg, const ModelParams& params);

}  // namespace evderain
