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


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "evderain/autodiff/ops.hpp"
#include "evderain/errors.hpp"
#include "evderain/model.hpp"
#include "evderain/ssm.hpp"
#include "support/suites.hpp"

using namespace evderain;
using ad::Tensor;

namespace {

Tensor random_tensor(std::mt19937_64& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v));
}

NetworkConfig small_config() {
  NetworkConfig cfg;
  cfg.widths = {8, 12};
  cfg.blocks_per_stage = 1;
  cfg.state_dim = 4;
  cfg.max_windows = 5;
  return cfg;
}

ModelParams block_params(std::size_t C, const Ms3mConfig& m, std::uint64_t seed) {
  NetworkConfig cfg;
  cfg.widths = {C};
  cfg.blocks_per_stage = 1;
  cfg.state_dim = m.state_dim;
  cfg.kernels = m.kernels;
  cfg.block_kernel = m.intra_kernel;
  cfg.use_ms3m = m.multi_scale;
  return init_params(cfg, seed);
}

std::vector<std::size_t> sorted_windows(std::mt19937_64& rng, std::size_t n, std::size_t windows) {
  std::vector<std::size_t> ids(n);
  for (auto& w : ids) w = rng() % windows;
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

TEST_CASE("stdf with zero temporal terms is the spatial path") {
  std::mt19937_64 rng(1);
  auto cfg = small_config();
  auto params = init_params(cfg, 3);
  const std::size_t N = 20;
  const Tensor pts = random_tensor(rng, {4, N});
  const auto ids = sorted_windows(rng, N, 3);
  for (const char* p : {"stem.window_embed", "stem.intra.weight", "stem.intra.bias", "stem.inter.weight",
                        "stem.inter.bias"}) {
    auto v = params.tensors.at(p).mutable_data();
    std::fill(v.begin(), v.end(), 0.0);
  }
  const Tensor got = stdf_forward(pts, ids, 3, cfg.stdf(), params, ad::Mode::eval);
  const Tensor f_s = ad::linear(ad::conv1d(pts, params.at("stem.spatial_dw.weight"), params.at("stem.spatial_dw.bias"), true),
                                params.at("stem.spatial_proj.weight"), params.at("stem.spatial_proj.bias"));
  ad::BatchNormStats stats{params.at("stem.bn.running_mean"), params.at("stem.bn.running_var")};
  const Tensor expect = ad::silu(ad::batchnorm1d(
      ad::conv1d(f_s, params.at("stem.fuse.weight"), params.at("stem.fuse.bias")), params.at("stem.bn.gamma"),
      params.at("stem.bn.beta"), stats, ad::Mode::eval));
  REQUIRE(got.shape() == expect.shape());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expect[i]);
}

TEST_CASE("stdf on a single event") {
  std::mt19937_64 rng(2);
  auto cfg = small_config();
  auto params = init_params(cfg, 3);
  const std::vector<std::size_t> ids{0};
  const Tensor out = stdf_forward(random_tensor(rng, {4, 1}), ids, 1, cfg.stdf(), params, ad::Mode::eval);
  CHECK(out.shape() == ad::Shape{8, 1});
}

TEST_CASE("stdf rejects too many windows") {
  std::mt19937_64 rng(2);
  auto cfg = small_config();
  auto params = init_params(cfg, 3);
  const std::vector<std::size_t> ids{0, 6};
  CHECK_THROWS_AS(stdf_forward(random_tensor(rng, {4, 2}), ids, 7, cfg.stdf(), params, ad::Mode::eval), RangeError);
}

TEST_CASE("stdf modulation vanishes with zero spatial features") {
  // f_s = 0 when the spatial weights and biases are zero; the output then
  // depends on f_t alone, so changing the intra/inter kernels changes nothing.
  std::mt19937_64 rng(4);
  auto cfg = small_config();
  auto params = init_params(cfg, 5);
  for (const char* p : {"stem.spatial_dw.weight", "stem.spatial_dw.bias", "stem.spatial_proj.weight",
                        "stem.spatial_proj.bias"}) {
    auto v = params.tensors.at(p).mutable_data();
    std::fill(v.begin(), v.end(), 0.0);
  }
  const Tensor pts = random_tensor(rng, {4, 15});
  const auto ids = sorted_windows(rng, 15, 4);
  const Tensor a = stdf_forward(pts, ids, 4, cfg.stdf(), params, ad::Mode::eval);
  for (const char* p : {"stem.intra.weight", "stem.inter.weight"}) {
    auto v = params.tensors.at(p).mutable_data();
    for (auto& x : v) x *= -3.0;
  }
  const Tensor b = stdf_forward(pts, ids, 4, cfg.stdf(), params, ad::Mode::eval);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("reversed aggregation of constant features") {
  const std::size_t C = 3, N = 5;
  NetworkConfig cfg;
  cfg.widths = {C};
  cfg.blocks_per_stage = 1;
  const auto params = init_params(cfg, 1);
  const std::vector<double> v{0.5, -1.0, 2.0};
  std::vector<double> data(C * N);
  for (std::size_t c = 0; c < C; ++c) std::fill_n(data.begin() + c * N, N, v[c]);
  const std::vector<std::size_t> ids(N, 0);
  const Tensor out = reversed_aggregation(Tensor::from({C, N}, data), ids, 1, params, "enc0.b0");
  const auto& W = params.at("enc0.b0.ra.weight");
  const auto& b = params.at("enc0.b0.ra.bias");
  for (std::size_t o = 0; o < C; ++o) {
    double expect = b[o];
    for (std::size_t i = 0; i < C; ++i) expect += W[o * 2 * C + i] * v[i] + W[o * 2 * C + C + i] * v[i];
    for (std::size_t n = 0; n < N; ++n) CHECK(out[o * N + n] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("reversed aggregation window means and no leakage") {
  std::mt19937_64 rng(6);
  const std::size_t C = 2, N = 10;
  NetworkConfig cfg;
  cfg.widths = {C};
  cfg.blocks_per_stage = 1;
  const auto params = init_params(cfg, 2);
  const std::vector<std::size_t> ids{0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  Tensor x = random_tensor(rng, {C, N});
  // Hand-computed means fed through the projection.
  auto expected = [&](const Tensor& in) {
    std::vector<double> out(C * N);
    const auto& W = params.at("enc0.b0.ra.weight");
    const auto& b = params.at("enc0.b0.ra.bias");
    for (std::size_t n = 0; n < N; ++n) {
      std::vector<double> mean(C, 0.0);
      std::size_t count = 0;
      for (std::size_t m = 0; m < N; ++m) {
        if (ids[m] != ids[n]) continue;
        ++count;
        for (std::size_t c = 0; c < C; ++c) mean[c] += in[c * N + m];
      }
      for (auto& v : mean) v /= static_cast<double>(count);
      for (std::size_t o = 0; o < C; ++o) {
        double acc = b[o];
        for (std::size_t i = 0; i < C; ++i) acc += W[o * 2 * C + i] * in[i * N + n] + W[o * 2 * C + C + i] * mean[i];
        out[o * N + n] = acc;
      }
    }
    return out;
  };
  const Tensor a = reversed_aggregation(x, ids, 2, params, "enc0.b0");
  const auto ea = expected(x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(ea[i]).epsilon(1e-13));
  Tensor x2 = x.clone();
  for (std::size_t c = 0; c < C; ++c) x2.mutable_data()[c * N + 1] += 5.0;
  const Tensor b = reversed_aggregation(x2, ids, 2, params, "enc0.b0");
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t n = 4; n < N; ++n) CHECK(b[c * N + n] == a[c * N + n]);
  }
}

TEST_CASE("ms3m matches a straight-line composition") {
  std::mt19937_64 rng(7);
  const std::size_t C = 8, N = 64;
  Ms3mConfig m;
  m.channels = C;
  m.state_dim = 4;
  const auto params = block_params(C, m, 9);
  const Tensor x = random_tensor(rng, {C, N});
  const auto ids = sorted_windows(rng, N, 4);
  const Tensor got = ms3m_forward(x, ids, 4, m, params, "enc0.b0");

  auto P = [&](const std::string& s) { return params.at("enc0.b0." + s); };
  // RA
  std::vector<double> means(C * 4, 0.0), counts(4, 0.0);
  for (std::size_t n = 0; n < N; ++n) counts[ids[n]] += 1.0;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < N; ++n) means[c * 4 + ids[n]] += x[c * N + n] / counts[ids[n]];
  std::vector<double> cat(2 * C * N);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < N; ++n) {
      cat[c * N + n] = x[c * N + n];
      cat[(C + c) * N + n] = means[c * 4 + ids[n]];
    }
  const Tensor ra = ad::linear(Tensor::from({2 * C, N}, cat), P("ra.weight"), P("ra.bias"));
  const Tensor intra = ad::silu(ad::conv1d(ra, P("intra.weight"), P("intra.bias"), true));
  std::vector<double> ra_means(C * 4, 0.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < N; ++n) ra_means[c * 4 + ids[n]] += ra[c * N + n] / counts[ids[n]];
  std::vector<double> diff(C * N);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < N; ++n) {
      const double prev = ids[n] == 0 ? 0.0 : ra_means[c * 4 + ids[n] - 1];
      diff[c * N + n] = ra[c * N + n] - prev;
    }
  const Tensor motion = ad::conv1d(Tensor::from({C, N}, diff), P("inter.weight"), P("inter.bias"), true);
  const Tensor fuse = ad::add(ad::mul(ad::sigmoid(motion), intra), motion);
  const Tensor gate = ad::sigmoid(ad::linear(x, P("gate.weight"), P("gate.bias")));
  const ssm::SsmWeights sw{P("ssm.delta.weight"), P("ssm.delta.bias"), P("ssm.b.weight"),
                           P("ssm.c.weight"),     P("ssm.a_log"),      P("ssm.d")};
  const Tensor dual = ad::mul(ssm::ssm_forward(ad::silu(fuse), sw), gate);
  const Tensor f0 = ad::conv1d(ad::linear(ra, P("ms.in.weight"), P("ms.in.bias")), P("ms.conv0.weight"),
                               P("ms.conv0.bias"), true);
  const Tensor f1 = ad::silu(ad::conv1d(f0, P("ms.conv1.weight"), P("ms.conv1.bias"), true));
  const Tensor f2 = ad::silu(ad::conv1d(f1, P("ms.conv2.weight"), P("ms.conv2.bias"), true));
  const Tensor ms = ad::silu(ad::add(f1, f2));
  const Tensor expect = ad::linear(ad::add(ms, dual), P("out.weight"), P("out.bias"));
  REQUIRE(got.shape() == expect.shape());
  double err = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - expect[i]));
  CHECK(err <= 1e-12);
}

TEST_CASE("closed gate leaves only the multi-scale path") {
  std::mt19937_64 rng(8);
  const std::size_t C = 4, N = 12;
  Ms3mConfig m;
  m.channels = C;
  m.state_dim = 2;
  auto params = block_params(C, m, 10);
  const Tensor x = random_tensor(rng, {C, N});
  const auto ids = sorted_windows(rng, N, 2);
  auto gb = params.tensors.at("enc0.b0.gate.bias").mutable_data();
  std::fill(gb.begin(), gb.end(), -1e4);
  const Tensor got = ms3m_forward(x, ids, 2, m, params, "enc0.b0");
  auto P = [&](const std::string& s) { return params.at("enc0.b0." + s); };
  const Tensor ra = reversed_aggregation(x, ids, 2, params, "enc0.b0");
  Tensor f = ad::conv1d(ad::linear(ra, P("ms.in.weight"), P("ms.in.bias")), P("ms.conv0.weight"), P("ms.conv0.bias"),
                        true);
  const Tensor f1 = ad::silu(ad::conv1d(f, P("ms.conv1.weight"), P("ms.conv1.bias"), true));
  const Tensor f2 = ad::silu(ad::conv1d(f1, P("ms.conv2.weight"), P("ms.conv2.bias"), true));
  const Tensor expect = ad::linear(ad::silu(ad::add(f1, f2)), P("out.weight"), P("out.bias"));
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("single pointwise kernel") {
  std::mt19937_64 rng(9);
  const std::size_t C = 4, N = 9;
  Ms3mConfig m;
  m.channels = C;
  m.state_dim = 2;
  m.kernels = {1};
  auto params = block_params(C, m, 11);
  auto gb = params.tensors.at("enc0.b0.gate.bias").mutable_data();
  std::fill(gb.begin(), gb.end(), -1e4);
  const Tensor x = random_tensor(rng, {C, N});
  const std::vector<std::size_t> ids(N, 0);
  const Tensor got = ms3m_forward(x, ids, 1, m, params, "enc0.b0");
  auto P = [&](const std::string& s) { return params.at("enc0.b0." + s); };
  const Tensor ra = reversed_aggregation(x, ids, 1, params, "enc0.b0");
  const Tensor f0 = ad::conv1d(ad::linear(ra, P("ms.in.weight"), P("ms.in.bias")), P("ms.conv0.weight"),
                               P("ms.conv0.bias"), true);
  const Tensor expect = ad::linear(ad::silu(f0), P("out.weight"), P("out.bias"));
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("gate bias is monotone in dual-branch magnitude") {
  std::mt19937_64 rng(12);
  const std::size_t C = 4, N = 16;
  Ms3mConfig m;
  m.channels = C;
  m.state_dim = 3;
  m.multi_scale = false;
  auto params = block_params(C, m, 13);
  // Identity output projection exposes f_dual.
  auto W = params.tensors.at("enc0.b0.out.weight").mutable_data();
  auto b = params.tensors.at("enc0.b0.out.bias").mutable_data();
  std::fill(W.begin(), W.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
  for (std::size_t c = 0; c < C; ++c) W[c * C + c] = 1.0;
  const Tensor x = random_tensor(rng, {C, N});
  const auto ids = sorted_windows(rng, N, 2);
  auto gb = params.tensors.at("enc0.b0.gate.bias").mutable_data();
  Tensor prev = ms3m_forward(x, ids, 2, m, params, "enc0.b0");
  for (int step = 0; step < 5; ++step) {
    for (auto& v : gb) v += 0.7;
    const Tensor cur = ms3m_forward(x, ids, 2, m, params, "enc0.b0");
    for (std::size_t i = 0; i < cur.size(); ++i) CHECK(std::abs(cur[i]) >= std::abs(prev[i]));
    prev = cur;
  }
}

TEST_CASE("network rows are distributions covering every event") {
  const auto events = testing::random_events(3, 150, 40, 30, 450000);
  const auto cloud = build_cloud(events, 0.1, 5, 40, 30);
  auto cfg = small_config();
  auto params = init_params(cfg, 4);
  for (const auto mode : {ad::Mode::train, ad::Mode::eval}) {
    const auto out = network_forward(cloud, cfg, params, mode);
    REQUIRE(out.probs.shape() == ad::Shape{cloud.size(), 2});
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK(std::abs(out.probs[2 * i] + out.probs[2 * i + 1] - 1.0) <= 1e-12);
    }
    CHECK(out.layout.window_offsets.back() == cloud.size());
  }
}

TEST_CASE("empty windows are tolerated") {
  std::vector<Event> events;
  for (std::uint64_t i = 0; i < 20; ++i) events.push_back(Event{static_cast<std::uint32_t>(i), 3, i * 10, 1, 0});
  const auto cloud = build_cloud(events, 0.1, 5, 40, 30);
  CHECK(cloud.windows[4].events.empty());
  auto cfg = small_config();
  const auto params = init_params(cfg, 4);
  CHECK(network_forward(cloud, cfg, params).probs.dim(0) == 20);
}

TEST_CASE("shuffled input order gives the same probabilities") {
  // Distinct pixels so no two events share a curve cell.
  std::vector<Event> events;
  for (std::uint32_t i = 0; i < 120; ++i) events.push_back(Event{(i * 7) % 40, (i * 11) % 30, i * 3000, 1, 0});
  const auto cloud = build_cloud(events, 0.1, 4, 40, 30);
  auto cfg = small_config();
  const auto params = init_params(cfg, 6);
  const auto base = network_forward(cloud, cfg, params).probs;

  std::mt19937_64 rng(1);
  EventCloud4D shuffled = cloud;
  std::vector<std::size_t> where;  // shuffled flat index -> original flat index
  std::size_t offset = 0;
  for (auto& w : shuffled.windows) {
    std::vector<std::size_t> perm(w.events.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    auto ev = w.events;
    auto z = w.z;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      w.events[i] = ev[perm[i]];
      w.z[i] = z[perm[i]];
      where.push_back(offset + perm[i]);
    }
    offset += perm.size();
  }
  const auto moved = network_forward(shuffled, cfg, params).probs;
  for (std::size_t i = 0; i < where.size(); ++i) {
    CHECK(std::abs(moved[2 * i + 1] - base[2 * where[i] + 1]) <= 1e-12);
  }
}

TEST_CASE("all ablation variants build and differentiate") {
  const auto events = testing::random_events(5, 60, 20, 20, 400000);
  const auto cloud = build_cloud(events, 0.1, 4, 20, 20);
  for (int mask = 0; mask < 4; ++mask) {
    auto cfg = small_config();
    cfg.use_stdf = mask & 1;
    cfg.use_ms3m = mask & 2;
    auto params = init_params(cfg, 1);
    validate_params(params, cfg);
    const auto out = network_forward(cloud, cfg, params, ad::Mode::train);
    CHECK(out.probs.dim(0) == cloud.size());
    ad::backward(ad::mean(ad::log(out.probs)));
    for (const auto& [name, t] : params.tensors) {
      if (params.buffers.count(name)) continue;
      INFO(name);
      CHECK(t.has_grad());
    }
  }
}

TEST_CASE("grid pooling ignores input order") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<CurvePoint> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({u(rng) * 40, u(rng) * 30, u(rng), static_cast<std::uint32_t>(i / 50)});
  const auto a = grid_pool(pts, 4.0, 4);
  auto rev = pts;
  std::reverse(rev.begin(), rev.end());
  const auto b = grid_pool(rev, 4.0, 4);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(a.group[i] == b.group[pts.size() - 1 - i]);
  for (std::size_t g = 0; g < a.points.size(); ++g) {
    CHECK(a.points[g].window == b.points[g].window);
    CHECK(a.points[g].x == doctest::Approx(b.points[g].x));
  }
}

TEST_CASE("config json round trip and unknown keys") {
  NetworkConfig cfg = small_config();
  cfg.scan_modes = {ScanMode::hilbert, ScanMode::zorder};
  cfg.use_fft_loss = false;
  const auto back = network_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  auto j = to_json(cfg);
  j["dropout"] = 0.1;
  CHECK_THROWS_AS(network_config_from_json(j), ConfigError);
  j = to_json(cfg);
  j["kernels"] = {1, 2};
  CHECK_THROWS_AS(network_config_from_json(j), ConfigError);
}

TEST_CASE("parameter validation names the problem") {
  auto cfg = small_config();
  auto params = init_params(cfg, 1);
  auto missing = params;
  missing.tensors.erase("head.weight");
  CHECK_THROWS_AS(validate_params(missing, cfg), CheckpointError);
  auto wrong = params;
  wrong.tensors["head.weight"] = Tensor::zeros({3, 3});
  CHECK_THROWS_AS(validate_params(wrong, cfg), CheckpointError);
  auto extra = params;
  extra.tensors["bogus"] = Tensor::zeros({1});
  CHECK_THROWS_AS(validate_params(extra, cfg), CheckpointError);
  auto other = cfg;
  other.widths = {8, 16};
  CHECK_THROWS_AS(validate_params(params, other), CheckpointError);
}

TEST_CASE("initialization is seeded") {
  const auto cfg = small_config();
  const auto a = init_params(cfg, 5), b = init_params(cfg, 5), c = init_params(cfg, 6);
  bool same = true, differ = false;
  for (const auto& [name, t] : a.tensors) {
    const auto& u = b.tensors.at(name);
    const auto& v = c.tensors.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      same = same && t[i] == u[i];
      differ = differ || t[i] != v[i];
    }
  }
  CHECK(same);
  CHECK(differ);
  for (double a_log : a.at("enc0.b0.ssm.a_log").data()) CHECK(-std::exp(a_log) < 0.0);
}
