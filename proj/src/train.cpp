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


#include "evderain/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "evderain/autodiff/ops.hpp"
#include "evderain/errors.hpp"

namespace evderain {

namespace {

constexpr const char* kParamPrefix = "param/";
constexpr const char* kMomentPrefix = "adam.m/";
constexpr const char* kVariancePrefix = "adam.v/";

std::vector<std::filesystem::path> paths_from_json(const nlohmann::json& j) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : j) out.emplace_back(p.get<std::string>());
  return out;
}

nlohmann::json paths_to_json(const std::vector<std::filesystem::path>& paths) {
  auto j = nlohmann::json::array();
  for (const auto& p : paths) j.push_back(p.string());
  return j;
}

nlohmann::json to_json(const OptimizerConfig& o) {
  return {{"lr", o.lr},       {"min_lr", o.min_lr}, {"weight_decay", o.weight_decay},
          {"beta1", o.beta1}, {"beta2", o.beta2},   {"eps", o.eps},
          {"epochs", o.epochs}, {"batch_size", o.batch_size}, {"max_steps", o.max_steps}};
}

OptimizerConfig optimizer_from_json(const nlohmann::json& j) {
  OptimizerConfig o;
  for (const auto& [key, value] : j.items()) {
    if (key == "lr") o.lr = value.get<double>();
    else if (key == "min_lr") o.min_lr = value.get<double>();
    else if (key == "weight_decay") o.weight_decay = value.get<double>();
    else if (key == "beta1") o.beta1 = value.get<double>();
    else if (key == "beta2") o.beta2 = value.get<double>();
    else if (key == "eps") o.eps = value.get<double>();
    else if (key == "epochs") o.epochs = value.get<std::size_t>();
    else if (key == "batch_size") o.batch_size = value.get<std::size_t>();
    else if (key == "max_steps") o.max_steps = value.get<std::size_t>();
    else throw ConfigError("unknown optimizer key '" + key + "'");
  }
  return o;
}

nlohmann::json to_json(const LossConfig& l) { return {{"lambda", l.lambda}, {"eps", l.eps}, {"eps_prime", l.eps_prime}}; }

LossConfig loss_from_json(const nlohmann::json& j) {
  LossConfig l;
  for (const auto& [key, value] : j.items()) {
    if (key == "lambda") l.lambda = value.get<double>();
    else if (key == "eps") l.eps = value.get<double>();
    else if (key == "eps_prime") l.eps_prime = value.get<double>();
    else throw ConfigError("unknown loss key '" + key + "'");
  }
  return l;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void validate(const RunConfig& cfg) {
  const auto& o = cfg.optimizer;
  if (o.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(o.lr > 0.0) || !(o.min_lr >= 0.0) || o.min_lr > o.lr) throw ConfigError("need 0 <= min_lr <= lr, lr > 0");
  if (!(o.weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0 && o.beta2 >= 0.0 && o.beta2 < 1.0)) throw ConfigError("betas must be in [0, 1)");
  if (!(o.eps > 0.0)) throw ConfigError("optimizer eps must be > 0");
  if (o.epochs == 0 && o.max_steps == 0) throw ConfigError("epochs or max_steps must be >= 1");
  if (!(cfg.window_duration > 0.0)) throw ConfigError("window duration must be > 0");
  if (cfg.num_windows == 0) throw ConfigError("window count must be >= 1");
  if (cfg.num_windows > cfg.network.max_windows) throw ConfigError("window count exceeds network max_windows");
  if (cfg.sensor_width == 0 || cfg.sensor_height == 0) throw ConfigError("sensor size must be positive");
  validate(cfg.network);
  validate(cfg.loss);
  validate(cfg.filters);
}

void check_paths(const RunConfig& cfg) {
  for (const auto* list : {&cfg.train_files, &cfg.val_files, &cfg.test_files}) {
    for (const auto& p : *list) {
      if (!std::filesystem::exists(p)) throw MissingFileError(p.string());
    }
  }
}

nlohmann::json to_json(const RunConfig& cfg) {
  return {{"train", paths_to_json(cfg.train_files)},
          {"val", paths_to_json(cfg.val_files)},
          {"test", paths_to_json(cfg.test_files)},
          {"checkpoint_dir", cfg.checkpoint_dir.string()},
          {"optimizer", to_json(cfg.optimizer)},
          {"network", to_json(cfg.network)},
          {"loss", to_json(cfg.loss)},
          {"window", {{"duration", cfg.window_duration}, {"count", cfg.num_windows}}},
          {"sensor", {{"width", cfg.sensor_width}, {"height", cfg.sensor_height}}},
          {"seed", cfg.seed},
          {"filters", to_json(cfg.filters)}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "train") cfg.train_files = paths_from_json(value);
      else if (key == "val") cfg.val_files = paths_from_json(value);
      else if (key == "test") cfg.test_files = paths_from_json(value);
      else if (key == "checkpoint_dir") cfg.checkpoint_dir = value.get<std::string>();
      else if (key == "optimizer") cfg.optimizer = optimizer_from_json(value);
      else if (key == "network") cfg.network = network_config_from_json(value);
      else if (key == "loss") cfg.loss = loss_from_json(value);
      else if (key == "window") {
        for (const auto& [k, v] : value.items()) {
          if (k == "duration") cfg.window_duration = v.get<double>();
          else if (k == "count") cfg.num_windows = v.get<std::size_t>();
          else throw ConfigError("unknown window key '" + k + "'");
        }
      } else if (key == "sensor") {
        for (const auto& [k, v] : value.items()) {
          if (k == "width") cfg.sensor_width = v.get<std::uint16_t>();
          else if (k == "height") cfg.sensor_height = v.get<std::uint16_t>();
          else throw ConfigError("unknown sensor key '" + k + "'");
        }
      } else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "filters") cfg.filters = filter_config_from_json(value);
      else throw ConfigError("unknown run config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run config value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

std::vector<Sample> make_samples(std::span<const Event> events, const RunConfig& cfg) {
  std::vector<Sample> out;
  for (auto& cloud : split_clouds(events, cfg.window_duration, cfg.num_windows, cfg.sensor_width, cfg.sensor_height)) {
    Sample s;
    for (const auto& p : flatten(cloud)) {
      if (!p.label) throw ValidationError("training data must be labeled");
      s.labels.push_back(*p.label);
    }
    s.cloud = std::move(cloud);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> load_samples(std::span<const std::filesystem::path> files, const RunConfig& cfg) {
  std::vector<Sample> out;
  for (const auto& f : files) {
    auto events = load_events(f, format_from_path(f));
    if (events.empty()) continue;
    for (auto& s : make_samples(events, cfg)) out.push_back(std::move(s));
  }
  return out;
}

void AdamW::step(ModelParams& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [path, tensor] : params.tensors) {
    if (params.buffers.count(path)) continue;
    auto w = tensor.mutable_data();
    auto& m = m_[path];
    auto& v = v_[path];
    m.resize(w.size(), 0.0);
    v.resize(w.size(), 0.0);
    const auto g = tensor.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      w[i] -= lr * cfg_.weight_decay * w[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
    }
  }
}

void AdamW::save(ad::Checkpoint& checkpoint) const {
  for (const auto& [path, m] : m_) checkpoint.tensors[kMomentPrefix + path] = ad::Tensor::from({m.size()}, m);
  for (const auto& [path, v] : v_) checkpoint.tensors[kVariancePrefix + path] = ad::Tensor::from({v.size()}, v);
  checkpoint.meta["optimizer_step"] = t_;
}

void AdamW::load(const ad::Checkpoint& checkpoint, const ModelParams& params) {
  m_.clear();
  v_.clear();
  t_ = checkpoint.meta.value("optimizer_step", std::size_t{0});
  for (const auto& [path, tensor] : params.tensors) {
    if (params.buffers.count(path)) continue;
    auto mi = checkpoint.tensors.find(kMomentPrefix + path);
    auto vi = checkpoint.tensors.find(kVariancePrefix + path);
    if (mi == checkpoint.tensors.end() || vi == checkpoint.tensors.end()) {
      if (t_ == 0) continue;
      throw CheckpointError("optimizer state missing for '" + path + "'");
    }
    if (mi->second.size() != tensor.size() || vi->second.size() != tensor.size()) {
      throw CheckpointError("optimizer state for '" + path + "' has the wrong size");
    }
    m_[path].assign(mi->second.data().begin(), mi->second.data().end());
    v_[path].assign(vi->second.data().begin(), vi->second.data().end());
  }
}

double cosine_lr(const OptimizerConfig& cfg, std::size_t step, std::size_t total) {
  if (total == 0) return cfg.lr;
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
  return cfg.min_lr + 0.5 * (cfg.lr - cfg.min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

nlohmann::json to_json(const StepRecord& r) {
  return {{"step", r.step}, {"epoch", r.epoch}, {"lr", r.lr},       {"ce", r.ce},
          {"fft", r.fft},   {"total", r.total}, {"wall", r.wall_seconds}};
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 engine(mix(mix(seed) ^ static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(engine() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Trainer::Trainer(RunConfig cfg, std::vector<Sample> samples)
    : cfg_(std::move(cfg)), samples_(std::move(samples)), optimizer_(cfg_.optimizer) {
  validate(cfg_);
  if (samples_.empty()) throw ContractError("no training samples");
  params_ = init_params(cfg_.network, cfg_.seed);
  const std::size_t bs = cfg_.optimizer.batch_size;
  steps_per_epoch_ = (samples_.size() + bs - 1) / bs;
  total_steps_ = cfg_.optimizer.max_steps > 0 ? cfg_.optimizer.max_steps : cfg_.optimizer.epochs * steps_per_epoch_;
}

std::vector<std::size_t> Trainer::batch_indices(std::size_t step) const {
  const std::size_t epoch = step / steps_per_epoch_;
  const std::size_t pos = step % steps_per_epoch_;
  const auto order = epoch_order(cfg_.seed, epoch, samples_.size());
  const std::size_t bs = cfg_.optimizer.batch_size;
  const std::size_t end = std::min(order.size(), (pos + 1) * bs);
  return {order.begin() + static_cast<std::ptrdiff_t>(pos * bs), order.begin() + static_cast<std::ptrdiff_t>(end)};
}

StepRecord Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t s = steps_done();
  StepRecord rec;
  rec.epoch = s / steps_per_epoch_;
  rec.lr = cosine_lr(cfg_.optimizer, s, total_steps_);
  for (auto& [path, tensor] : params_.tensors) {
    if (params_.buffers.count(path)) continue;
    tensor.set_requires_grad(true);
    tensor.zero_grad();
  }
  const auto batch = batch_indices(s);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const std::size_t i : batch) {
    const auto& sample = samples_[i];
    auto out = network_forward(sample.cloud, cfg_.network, params_, ad::Mode::train);
    auto parts = total_loss(out.probs, sample.labels, cfg_.loss, cfg_.network.use_fft_loss, &out.layout);
    if (!std::isfinite(parts.total.item())) throw NumericError(s + 1, "training loss is not finite");
    ad::backward(ad::mul_scalar(parts.total, scale));
    rec.ce += parts.ce * scale;
    rec.fft += parts.fft * scale;
    rec.total += parts.total.item() * scale;
  }
  optimizer_.step(params_, rec.lr);
  rec.step = steps_done();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

ad::Checkpoint Trainer::checkpoint() const {
  ad::Checkpoint ck;
  for (const auto& [path, tensor] : params_.tensors) ck.tensors[kParamPrefix + path] = tensor.detach();
  optimizer_.save(ck);
  ck.meta["format"] = "evderain-model";
  ck.meta["step"] = steps_done();
  ck.meta["config"] = to_json(cfg_);
  return ck;
}

void Trainer::resume(const ad::Checkpoint& checkpoint) {
  params_ = params_from_checkpoint(checkpoint, cfg_.network);
  optimizer_.load(checkpoint, params_);
}

ModelParams params_from_checkpoint(const ad::Checkpoint& checkpoint, const NetworkConfig& cfg) {
  ModelParams params;
  const std::string prefix = kParamPrefix;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    if (name.rfind(prefix, 0) != 0) continue;
    params.tensors[name.substr(prefix.size())] = tensor.clone();
  }
  for (const auto& spec : describe_params(cfg)) {
    if (spec.buffer) params.buffers.insert(spec.path);
  }
  validate_params(params, cfg);
  return params;
}

RunConfig config_from_checkpoint(const ad::Checkpoint& checkpoint) {
  if (!checkpoint.meta.contains("config")) throw CheckpointError("checkpoint carries no run config");
  try {
    return run_config_from_json(checkpoint.meta.at("config"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config is invalid: ") + e.what());
  }
}

std::vector<std::uint8_t> predict_events(std::span<const Event> events, const RunConfig& cfg,
                                         const ModelParams& params) {
  std::vector<std::uint8_t> out;
  out.reserve(events.size());
  if (events.empty()) return out;
  ad::NoGradGuard guard;
  for (const auto& cloud : split_clouds(events, cfg.window_duration, cfg.num_windows, cfg.sensor_width,
                                        cfg.sensor_height)) {
    const auto pred = predict_labels(network_forward(cloud, cfg.network, params).probs);
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

EvalReport evaluate_samples(std::span<const Sample> samples, const NetworkConfig& cfg, const ModelParams& params) {
  ad::NoGradGuard guard;
  std::vector<std::uint8_t> pred, labels;
  for (const auto& s : samples) {
    const auto p = predict_labels(network_forward(s.cloud, cfg, params).probs);
    pred.insert(pred.end(), p.begin(), p.end());
    labels.insert(labels.end(), s.labels.begin(), s.labels.end());
  }
  return evaluate(pred, labels);
}

}  // namespace evderain
