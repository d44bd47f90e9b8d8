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


#include "evderain/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include "evderain/errors.hpp"
#include "evderain/ssm.hpp"

namespace evderain {

namespace {

using ad::Tensor;

std::string stage_prefix(const char* kind, std::size_t stage, std::size_t block) {
  return std::string(kind) + std::to_string(stage) + ".b" + std::to_string(block);
}

/// Portable uniform double in [0, 1) from a 64-bit engine.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

void add_linear(std::vector<ParamSpec>& out, const std::string& path, std::size_t out_dim, std::size_t in_dim,
                bool bias = true) {
  out.push_back({path + ".weight", {out_dim, in_dim}, InitKind::uniform_fan_in, in_dim, false});
  if (bias) out.push_back({path + ".bias", {out_dim}, InitKind::uniform_fan_in, in_dim, false});
}

void add_depthwise(std::vector<ParamSpec>& out, const std::string& path, std::size_t channels, std::size_t k) {
  out.push_back({path + ".weight", {channels, k}, InitKind::uniform_fan_in, k, false});
  out.push_back({path + ".bias", {channels}, InitKind::uniform_fan_in, k, false});
}

void add_block(std::vector<ParamSpec>& out, const std::string& prefix, const Ms3mConfig& cfg) {
  const std::size_t C = cfg.channels, N = cfg.state_dim;
  add_linear(out, prefix + ".ra", C, 2 * C);
  add_depthwise(out, prefix + ".intra", C, cfg.intra_kernel);
  add_depthwise(out, prefix + ".inter", C, cfg.inter_kernel);
  add_linear(out, prefix + ".gate", C, C);
  out.push_back({prefix + ".ssm.delta.weight", {C, C}, InitKind::uniform_fan_in, C, false});
  out.push_back({prefix + ".ssm.delta.bias", {C}, InitKind::delta_bias, C, false});
  add_linear(out, prefix + ".ssm.b", N, C, false);
  add_linear(out, prefix + ".ssm.c", N, C, false);
  out.push_back({prefix + ".ssm.a_log", {C, N}, InitKind::a_log, 1, false});
  out.push_back({prefix + ".ssm.d", {C}, InitKind::ones, 1, false});
  if (cfg.multi_scale) {
    add_linear(out, prefix + ".ms.in", C, C);
    for (std::size_t i = 0; i < cfg.kernels.size(); ++i) {
      add_depthwise(out, prefix + ".ms.conv" + std::to_string(i), C, cfg.kernels[i]);
    }
  }
  add_linear(out, prefix + ".out", C, C);
}

Tensor linear_at(const Tensor& x, const ModelParams& p, const std::string& path, bool bias = true) {
  return ad::linear(x, p.at(path + ".weight"), bias ? p.at(path + ".bias") : Tensor());
}

Tensor depthwise_at(const Tensor& x, const ModelParams& p, const std::string& path) {
  return ad::conv1d(x, p.at(path + ".weight"), p.at(path + ".bias"), true);
}

/// (4 x N) rows x/W, y/H, z, p in the given point order.
Tensor coordinate_features(std::span<const CloudPoint> flat, std::span<const std::size_t> order,
                           const EventCloud4D& cloud) {
  const std::size_t N = order.size();
  std::vector<double> v(4 * N);
  const double w = std::max<double>(1.0, cloud.sensor_width);
  const double h = std::max<double>(1.0, cloud.sensor_height);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& pt = flat[order[i]];
    v[i] = pt.x / w;
    v[N + i] = pt.y / h;
    v[2 * N + i] = pt.z;
    v[3 * N + i] = pt.p;
  }
  return Tensor::from({4, N}, std::move(v));
}

struct Serialized {
  std::vector<std::size_t> order;
  std::vector<std::size_t> inverse;
  std::vector<std::size_t> window_ids;  // in scan order
};

Serialized serialize_stage(std::span<const CurvePoint> points, ScanMode mode, unsigned bits) {
  Serialized s;
  s.order = serialize_points(points, mode, bits).order;
  s.inverse = invert_permutation(s.order);
  s.window_ids.resize(s.order.size());
  for (std::size_t i = 0; i < s.order.size(); ++i) s.window_ids[i] = points[s.order[i]].window;
  return s;
}

/// Stem without the decoupled temporal branches: linear(f_s + f_t).
Tensor naive_stem(const Tensor& points, std::span<const std::size_t> window_ids, const ModelParams& params,
                  const std::string& prefix) {
  const Tensor f_s = linear_at(depthwise_at(points, params, prefix + ".spatial_dw"), params, prefix + ".spatial_proj");
  const Tensor f_t = ad::embedding_lookup(params.at(prefix + ".window_embed"), window_ids);
  return linear_at(ad::add(f_s, f_t), params, prefix + ".mix");
}

}  // namespace

StdfConfig NetworkConfig::stdf() const {
  StdfConfig s;
  s.channels = widths.front();
  s.spatial_kernel = s.intra_kernel = s.inter_kernel = s.fuse_kernel = stdf_kernel;
  s.max_windows = max_windows;
  return s;
}

Ms3mConfig NetworkConfig::ms3m(std::size_t stage) const {
  Ms3mConfig m;
  m.channels = widths.at(stage);
  m.state_dim = state_dim;
  m.kernels = kernels;
  m.intra_kernel = m.inter_kernel = block_kernel;
  m.multi_scale = use_ms3m;
  return m;
}

void validate(const NetworkConfig& cfg) {
  auto odd = [](std::size_t k) { return k >= 1 && k % 2 == 1; };
  if (cfg.widths.empty()) throw ConfigError("widths must list at least one stage");
  for (auto w : cfg.widths) {
    if (w == 0) throw ConfigError("widths must be >= 1");
  }
  if (cfg.blocks_per_stage == 0) throw ConfigError("blocks_per_stage must be >= 1");
  if (cfg.scan_modes.empty()) throw ConfigError("scan_modes must not be empty");
  if (cfg.grid_bits == 0 || cfg.grid_bits > kMaxCurveBits) throw ConfigError("grid_bits must be in [1, 21]");
  if (!(cfg.pool_cell > 0.0)) throw ConfigError("pool_cell must be > 0");
  if (cfg.pool_time_bins == 0) throw ConfigError("pool_time_bins must be >= 1");
  if (cfg.state_dim == 0) throw ConfigError("state_dim must be >= 1");
  if (cfg.kernels.empty()) throw ConfigError("kernels must not be empty");
  for (auto k : cfg.kernels) {
    if (!odd(k)) throw ConfigError("kernel sizes must be odd");
  }
  if (!odd(cfg.block_kernel) || !odd(cfg.stdf_kernel)) throw ConfigError("conv kernel sizes must be odd");
  if (cfg.max_windows == 0) throw ConfigError("max_windows must be >= 1");
}

nlohmann::json to_json(const NetworkConfig& cfg) {
  nlohmann::json j;
  j["widths"] = cfg.widths;
  j["blocks_per_stage"] = cfg.blocks_per_stage;
  j["scan_modes"] = nlohmann::json::array();
  for (auto m : cfg.scan_modes) j["scan_modes"].push_back(to_string(m));
  j["grid_bits"] = cfg.grid_bits;
  j["pool_cell"] = cfg.pool_cell;
  j["pool_time_bins"] = cfg.pool_time_bins;
  j["state_dim"] = cfg.state_dim;
  j["kernels"] = cfg.kernels;
  j["block_kernel"] = cfg.block_kernel;
  j["stdf_kernel"] = cfg.stdf_kernel;
  j["max_windows"] = cfg.max_windows;
  j["use_stdf"] = cfg.use_stdf;
  j["use_ms3m"] = cfg.use_ms3m;
  j["use_fft_loss"] = cfg.use_fft_loss;
  return j;
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("network config must be a JSON object");
  NetworkConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "widths") cfg.widths = value.get<std::vector<std::size_t>>();
      else if (key == "blocks_per_stage") cfg.blocks_per_stage = value.get<std::size_t>();
      else if (key == "scan_modes") {
        cfg.scan_modes.clear();
        for (const auto& m : value) cfg.scan_modes.push_back(parse_scan_mode(m.get<std::string>()));
      } else if (key == "grid_bits") cfg.grid_bits = value.get<unsigned>();
      else if (key == "pool_cell") cfg.pool_cell = value.get<double>();
      else if (key == "pool_time_bins") cfg.pool_time_bins = value.get<std::size_t>();
      else if (key == "state_dim") cfg.state_dim = value.get<std::size_t>();
      else if (key == "kernels") cfg.kernels = value.get<std::vector<std::size_t>>();
      else if (key == "block_kernel") cfg.block_kernel = value.get<std::size_t>();
      else if (key == "stdf_kernel") cfg.stdf_kernel = value.get<std::size_t>();
      else if (key == "max_windows") cfg.max_windows = value.get<std::size_t>();
      else if (key == "use_stdf") cfg.use_stdf = value.get<bool>();
      else if (key == "use_ms3m") cfg.use_ms3m = value.get<bool>();
      else if (key == "use_fft_loss") cfg.use_fft_loss = value.get<bool>();
      else throw ConfigError("unknown network config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad network config value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::vector<ParamSpec> describe_params(const NetworkConfig& cfg) {
  validate(cfg);
  std::vector<ParamSpec> out;
  const std::size_t C0 = cfg.widths.front();
  const std::size_t k = cfg.stdf_kernel;
  add_depthwise(out, "stem.spatial_dw", 4, k);
  add_linear(out, "stem.spatial_proj", C0, 4);
  out.push_back({"stem.window_embed", {C0, cfg.max_windows}, InitKind::embedding, 1, false});
  if (cfg.use_stdf) {
    out.push_back({"stem.intra.weight", {C0, 1, k}, InitKind::uniform_fan_in, k, false});
    out.push_back({"stem.intra.bias", {C0}, InitKind::uniform_fan_in, k, false});
    add_depthwise(out, "stem.inter", C0, k);
    out.push_back({"stem.fuse.weight", {C0, C0, k}, InitKind::uniform_fan_in, C0 * k, false});
    out.push_back({"stem.fuse.bias", {C0}, InitKind::uniform_fan_in, C0 * k, false});
    out.push_back({"stem.bn.gamma", {C0}, InitKind::ones, 1, false});
    out.push_back({"stem.bn.beta", {C0}, InitKind::zeros, 1, false});
    out.push_back({"stem.bn.running_mean", {C0}, InitKind::zeros, 1, true});
    out.push_back({"stem.bn.running_var", {C0}, InitKind::ones, 1, true});
  } else {
    add_linear(out, "stem.mix", C0, C0);
  }
  const std::size_t S = cfg.widths.size();
  for (std::size_t s = 0; s < S; ++s) {
    if (s > 0) add_linear(out, "down" + std::to_string(s - 1), cfg.widths[s], cfg.widths[s - 1]);
    for (std::size_t b = 0; b < cfg.blocks_per_stage; ++b) add_block(out, stage_prefix("enc", s, b), cfg.ms3m(s));
  }
  for (std::size_t s = S - 1; s-- > 0;) {
    add_linear(out, "up" + std::to_string(s), cfg.widths[s], cfg.widths[s + 1]);
    for (std::size_t b = 0; b < cfg.blocks_per_stage; ++b) add_block(out, stage_prefix("dec", s, b), cfg.ms3m(s));
  }
  add_linear(out, "head", 2, C0);
  return out;
}

const ad::Tensor& ModelParams::at(const std::string& path) const {
  auto it = tensors.find(path);
  if (it == tensors.end()) throw CheckpointError("missing parameter '" + path + "'");
  return it->second;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [path, t] : tensors) {
    if (!buffers.count(path)) n += t.size();
  }
  return n;
}

ModelParams init_params(const NetworkConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams params;
  for (const auto& spec : describe_params(cfg)) {
    std::vector<double> v(ad::numel(spec.shape));
    switch (spec.init) {
      case InitKind::uniform_fan_in: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        for (auto& x : v) x = (2.0 * unit_uniform(rng) - 1.0) * bound;
        break;
      }
      case InitKind::zeros: break;
      case InitKind::ones: std::fill(v.begin(), v.end(), 1.0); break;
      case InitKind::embedding:
        for (auto& x : v) x = 2.0 * unit_uniform(rng) - 1.0;
        break;
      case InitKind::a_log: {
        const std::size_t N = spec.shape[1];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::log(static_cast<double>(i % N + 1));
        break;
      }
      case InitKind::delta_bias:
        // Step sizes log-uniform in [1e-3, 1e-1].
        for (auto& x : v) x = inverse_softplus(std::exp(std::log(1e-3) + unit_uniform(rng) * std::log(100.0)));
        break;
    }
    params.tensors.emplace(spec.path, Tensor::from(spec.shape, std::move(v), !spec.buffer));
    if (spec.buffer) params.buffers.insert(spec.path);
  }
  return params;
}

void validate_params(const ModelParams& params, const NetworkConfig& cfg) {
  const auto specs = describe_params(cfg);
  for (const auto& spec : specs) {
    auto it = params.tensors.find(spec.path);
    if (it == params.tensors.end()) throw CheckpointError("missing parameter '" + spec.path + "'");
    if (it->second.shape() != spec.shape) {
      throw CheckpointError("parameter '" + spec.path + "' has shape " + ad::shape_string(it->second.shape()) +
                            ", config expects " + ad::shape_string(spec.shape));
    }
  }
  if (params.tensors.size() != specs.size()) {
    for (const auto& [path, t] : params.tensors) {
      const bool known = std::any_of(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.path == path; });
      if (!known) throw CheckpointError("unexpected parameter '" + path + "'");
    }
  }
}

ad::Tensor stdf_forward(const ad::Tensor& points, std::span<const std::size_t> window_ids, std::size_t num_windows,
                        const StdfConfig& cfg, ModelParams& params, ad::Mode mode, const std::string& prefix) {
  if (points.rank() != 2 || points.dim(0) != 4 || points.dim(1) != window_ids.size() || window_ids.empty()) {
    throw ShapeError("stdf_forward: expected (4 x N) points with N window ids, got " +
                     ad::shape_string(points.shape()));
  }
  if (num_windows > cfg.max_windows) {
    throw RangeError("stdf_forward: " + std::to_string(num_windows) + " windows exceed the embedding table of " +
                     std::to_string(cfg.max_windows));
  }
  const Tensor& table = params.at(prefix + ".window_embed");
  const Tensor f_s =
      linear_at(depthwise_at(points, params, prefix + ".spatial_dw"), params, prefix + ".spatial_proj");
  const Tensor f_t = ad::embedding_lookup(table, window_ids);
  // Intra-window: conv along the serialized sequence of normalized times.
  const Tensor z = ad::slice(points, 0, 2, 3);
  const Tensor intra = ad::conv1d(z, params.at(prefix + ".intra.weight"), params.at(prefix + ".intra.bias"));
  // Inter-window: conv across consecutive window embeddings, then broadcast.
  const Tensor window_seq = ad::slice(table, 1, 0, std::max<std::size_t>(num_windows, 1));
  const Tensor inter = ad::gather_cols(depthwise_at(window_seq, params, prefix + ".inter"), window_ids);
  const Tensor modulated = ad::mul(f_s, ad::add(intra, inter));
  const Tensor fused = ad::add(ad::add(f_s, f_t), modulated);
  const Tensor conv = ad::conv1d(fused, params.at(prefix + ".fuse.weight"), params.at(prefix + ".fuse.bias"));
  ad::BatchNormStats stats{params.at(prefix + ".bn.running_mean"), params.at(prefix + ".bn.running_var")};
  return ad::silu(
      ad::batchnorm1d(conv, params.at(prefix + ".bn.gamma"), params.at(prefix + ".bn.beta"), stats, mode));
}

ad::Tensor reversed_aggregation(const ad::Tensor& features, std::span<const std::size_t> window_ids,
                                std::size_t num_windows, const ModelParams& params, const std::string& prefix) {
  const Tensor means = ad::segment_mean(features, window_ids, num_windows);
  const Tensor broadcast = ad::gather_cols(means, window_ids);
  const std::vector<Tensor> parts{features, broadcast};
  return linear_at(ad::concat(parts, 0), params, prefix + ".ra");
}

ad::Tensor ms3m_forward(const ad::Tensor& input, std::span<const std::size_t> window_ids, std::size_t num_windows,
                        const Ms3mConfig& cfg, const ModelParams& params, const std::string& prefix) {
  const std::size_t C = input.dim(0);
  const Tensor ra = reversed_aggregation(input, window_ids, num_windows, params, prefix);

  // Intra-window appearance branch.
  const Tensor f_intra = ad::silu(depthwise_at(ra, params, prefix + ".intra"));

  // Inter-window motion branch: difference to the previous window's aggregate.
  const Tensor window_means = ad::segment_mean(ra, window_ids, num_windows);
  const std::vector<Tensor> shifted_parts{Tensor::zeros({C, 1}), window_means};
  const Tensor shifted = ad::concat(shifted_parts, 1);  // column w holds window w-1
  const Tensor previous = ad::gather_cols(shifted, window_ids);
  const Tensor f_motion = depthwise_at(ad::sub(ra, previous), params, prefix + ".inter");

  const Tensor f_fuse = ad::add(ad::mul(ad::sigmoid(f_motion), f_intra), f_motion);
  const Tensor gate = ad::sigmoid(linear_at(input, params, prefix + ".gate"));
  ssm::SsmWeights w{params.at(prefix + ".ssm.delta.weight"), params.at(prefix + ".ssm.delta.bias"),
                    params.at(prefix + ".ssm.b.weight"),     params.at(prefix + ".ssm.c.weight"),
                    params.at(prefix + ".ssm.a_log"),        params.at(prefix + ".ssm.d")};
  const Tensor f_dual = ad::mul(ssm::ssm_forward(ad::silu(f_fuse), w), gate);

  if (!cfg.multi_scale) return linear_at(f_dual, params, prefix + ".out");

  // Multi-scale local pathway: f_0 = conv^{k0}(linear(RA)), f_i = silu(conv^{k_i}(f_{i-1})).
  Tensor f = depthwise_at(linear_at(ra, params, prefix + ".ms.in"), params, prefix + ".ms.conv0");
  Tensor f_ms;
  if (cfg.kernels.size() == 1) {
    f_ms = ad::silu(f);
  } else {
    Tensor acc;
    for (std::size_t i = 1; i < cfg.kernels.size(); ++i) {
      f = ad::silu(depthwise_at(f, params, prefix + ".ms.conv" + std::to_string(i)));
      acc = acc.defined() ? ad::add(acc, f) : f;
    }
    f_ms = ad::silu(acc);
  }
  return linear_at(ad::add(f_ms, f_dual), params, prefix + ".out");
}

PoolResult grid_pool(std::span<const CurvePoint> points, double cell, std::size_t time_bins) {
  using Key = std::tuple<std::uint32_t, std::int64_t, std::int64_t, std::int64_t>;
  std::vector<Key> keys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const auto zb = std::min<std::int64_t>(static_cast<std::int64_t>(time_bins) - 1,
                                           static_cast<std::int64_t>(std::floor(p.z * static_cast<double>(time_bins))));
    keys[i] = Key{p.window, static_cast<std::int64_t>(std::floor(p.x / cell)),
                  static_cast<std::int64_t>(std::floor(p.y / cell)), std::max<std::int64_t>(zb, 0)};
  }
  std::vector<Key> unique = keys;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  PoolResult r;
  r.group.resize(points.size());
  r.points.assign(unique.size(), CurvePoint{});
  std::vector<double> count(unique.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto g = static_cast<std::size_t>(std::lower_bound(unique.begin(), unique.end(), keys[i]) - unique.begin());
    r.group[i] = g;
    r.points[g].x += points[i].x;
    r.points[g].y += points[i].y;
    r.points[g].z += points[i].z;
    r.points[g].window = points[i].window;
    count[g] += 1.0;
  }
  for (std::size_t g = 0; g < unique.size(); ++g) {
    r.points[g].x /= count[g];
    r.points[g].y /= count[g];
    r.points[g].z /= count[g];
  }
  return r;
}

NetworkOutput network_forward(const EventCloud4D& cloud, const NetworkConfig& cfg, ModelParams& params,
                              ad::Mode mode) {
  if (cloud.empty()) throw EmptyCloudError("network_forward: cloud has no events");
  const auto flat = flatten(cloud);
  const std::size_t num_windows = cloud.windows.size();
  const std::size_t S = cfg.widths.size();
  std::size_t block_counter = 0;
  auto next_mode = [&] { return cfg.scan_modes[block_counter++ % cfg.scan_modes.size()]; };

  std::vector<std::vector<CurvePoint>> stage_points(S);
  stage_points[0] = curve_points(cloud);

  // Front-end on the first scan mode; its order also defines the loss layout.
  const Serialized front = serialize_stage(stage_points[0], cfg.scan_modes.front(), cfg.grid_bits);
  const Tensor coords = coordinate_features(flat, front.order, cloud);
  Tensor f = cfg.use_stdf ? stdf_forward(coords, front.window_ids, num_windows, cfg.stdf(), params, mode)
                          : naive_stem(coords, front.window_ids, params, "stem");
  f = ad::gather_cols(f, front.inverse);

  auto run_block = [&](const Tensor& x, std::span<const CurvePoint> points, const std::string& prefix,
                       const Ms3mConfig& bc) {
    const Serialized s = serialize_stage(points, next_mode(), cfg.grid_bits);
    const Tensor y = ms3m_forward(ad::gather_cols(x, s.order), s.window_ids, num_windows, bc, params, prefix);
    return ad::add(x, ad::gather_cols(y, s.inverse));
  };

  std::vector<PoolResult> pools;
  std::vector<Tensor> skips;
  for (std::size_t s = 0; s < S; ++s) {
    if (s > 0) {
      const double cell = cfg.pool_cell * std::ldexp(1.0, static_cast<int>(s - 1));
      const std::size_t bins = std::max<std::size_t>(1, cfg.pool_time_bins >> (s - 1));
      pools.push_back(grid_pool(stage_points[s - 1], cell, bins));
      const Tensor pooled = ad::segment_mean(f, pools.back().group, pools.back().points.size());
      f = linear_at(pooled, params, "down" + std::to_string(s - 1));
      stage_points[s] = pools.back().points;
    }
    for (std::size_t b = 0; b < cfg.blocks_per_stage; ++b) {
      f = run_block(f, stage_points[s], stage_prefix("enc", s, b), cfg.ms3m(s));
    }
    if (s + 1 < S) skips.push_back(f);
  }
  for (std::size_t s = S - 1; s-- > 0;) {
    f = ad::gather_cols(f, pools[s].group);
    f = ad::add(linear_at(f, params, "up" + std::to_string(s)), skips[s]);
    for (std::size_t b = 0; b < cfg.blocks_per_stage; ++b) {
      f = run_block(f, stage_points[s], stage_prefix("dec", s, b), cfg.ms3m(s));
    }
  }

  NetworkOutput out;
  out.probs = ad::transpose(ad::softmax(linear_at(f, params, "head"), 0));
  out.layout.order = front.order;
  out.layout.window_offsets.assign(num_windows + 1, 0);
  for (auto w : front.window_ids) ++out.layout.window_offsets[w + 1];
  std::partial_sum(out.layout.window_offsets.begin(), out.layout.window_offsets.end(),
                   out.layout.window_offsets.begin());
  return out;
}

NetworkOutput network_forward(const EventCloud4D& cloud, const NetworkConfig& cfg, const ModelParams& params) {
  // Eval mode never writes to the running statistics.
  return network_forward(cloud, cfg, const_cast<ModelParams&>(params), ad::Mode::eval);
}

std::vector<std::uint8_t> predict_labels(const ad::Tensor& probs) {
  const std::size_t N = probs.dim(0);
  std::vector<std::uint8_t> out(N);
  for (std::size_t i = 0; i < N; ++i) out[i] = probs[i * 2 + 1] > 0.5 ? 1 : 0;
  return out;
}

}  // namespace evderain
