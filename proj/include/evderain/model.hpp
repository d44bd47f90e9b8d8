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
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evderain/autodiff/ops.hpp"
#include "evderain/autodiff/tensor.hpp"
#include "evderain/curves.hpp"
#include "evderain/events.hpp"
#include "evderain/loss_metrics.hpp"

namespace evderain {

// Feature tensors throughout the network are channel-major: (channels x events).

struct StdfConfig {
  std::size_t channels = 32;
  std::size_t spatial_kernel = 3;
  std::size_t intra_kernel = 3;
  std::size_t inter_kernel = 3;
  std::size_t fuse_kernel = 3;
  std::size_t max_windows = 8;
};

struct Ms3mConfig {
  std::size_t channels = 32;
  std::size_t state_dim = 8;
  std::vector<std::size_t> kernels{1, 3, 5};
  std::size_t intra_kernel = 3;
  std::size_t inter_kernel = 3;
  /// false reverts to the dual-branch block without the multi-scale pathway.
  bool multi_scale = true;
};

struct NetworkConfig {
  std::vector<std::size_t> widths{32, 64};  // one entry per encoder stage
  std::size_t blocks_per_stage = 2;
  std::vector<ScanMode> scan_modes{kAllScanModes.begin(), kAllScanModes.end()};
  unsigned grid_bits = 10;
  double pool_cell = 4.0;             // pixels, doubled at every further stage
  std::size_t pool_time_bins = 4;     // z bins, halved at every further stage
  std::size_t state_dim = 8;
  std::vector<std::size_t> kernels{1, 3, 5};
  std::size_t block_kernel = 3;       // intra/inter branch conv length
  std::size_t stdf_kernel = 3;        // STDF conv lengths
  std::size_t max_windows = 8;
  bool use_stdf = true;
  bool use_ms3m = true;
  bool use_fft_loss = true;

  StdfConfig stdf() const;
  Ms3mConfig ms3m(std::size_t stage) const;
};

/// Throws ConfigError on any violated invariant.
void validate(const NetworkConfig& cfg);
nlohmann::json to_json(const NetworkConfig& cfg);
/// Rejects unknown keys with ConfigError.
NetworkConfig network_config_from_json(const nlohmann::json& j);

enum class InitKind { uniform_fan_in, zeros, ones, embedding, a_log, delta_bias };

struct ParamSpec {
  std::string path;
  ad::Shape shape;
  InitKind init = InitKind::uniform_fan_in;
  std::size_t fan_in = 1;
  bool buffer = false;  // running statistics, not optimized
};

std::vector<ParamSpec> describe_params(const NetworkConfig& cfg);

/// All learnable weights and buffers keyed by layer path.
struct ModelParams {
  std::map<std::string, ad::Tensor> tensors;
  std::set<std::string> buffers;

  const ad::Tensor& at(const std::string& path) const;
  std::size_t parameter_count() const;
};

ModelParams init_params(const NetworkConfig& cfg, std::uint64_t seed);

/// Throws CheckpointError naming the first missing, extra or mis-shaped path.
void validate_params(const ModelParams& params, const NetworkConfig& cfg);

/// Spatio-temporal decoupling and fusion front-end.
///   points (4 x N): rows x, y, z, p in serialized order
///   window_ids (N): T_n per event, non-decreasing
/// Returns (C x N). Train mode updates the batch-norm running statistics.
ad::Tensor stdf_forward(const ad::Tensor& points, std::span<const std::size_t> window_ids, std::size_t num_windows,
                        const StdfConfig& cfg, ModelParams& params, ad::Mode mode,
                        const std::string& prefix = "stem");

/// Window-mean aggregation broadcast back to each event, concatenated with
/// the pointwise features and projected to C channels: (C x N) -> (C x N).
ad::Tensor reversed_aggregation(const ad::Tensor& features, std::span<const std::size_t> window_ids,
                                std::size_t num_windows, const ModelParams& params, const std::string& prefix);

/// Multi-scale state space block, (C x N) -> (C x N). Returns f_out; the
/// caller adds the residual.
ad::Tensor ms3m_forward(const ad::Tensor& input, std::span<const std::size_t> window_ids, std::size_t num_windows,
                        const Ms3mConfig& cfg, const ModelParams& params, const std::string& prefix);

struct PoolResult {
  std::vector<std::size_t> group;  // group id per input point
  std::vector<CurvePoint> points;  // one representative per group
};

/// Groups points sharing a (window, x/cell, y/cell, z*time_bins) cell. Group
/// ids follow ascending cell key, so they do not depend on input order.
PoolResult grid_pool(std::span<const CurvePoint> points, double cell, std::size_t time_bins);

struct NetworkOutput {
  ad::Tensor probs;        // (N x 2), rows in flatten(cloud) order
  SequenceLayout layout;   // front-end serialization, used by the frequency loss
};

NetworkOutput network_forward(const EventCloud4D& cloud, const NetworkConfig& cfg, ModelParams& params,
                              ad::Mode mode);
/// Inference with running statistics; leaves params untouched.
NetworkOutput network_forward(const EventCloud4D& cloud, const NetworkConfig& cfg, const ModelParams& params);

/// 1 where P(rain) > 0.5.
std::vector<std::uint8_t> predict_labels(const ad::Tensor& probs);

}  // namespace evderain
