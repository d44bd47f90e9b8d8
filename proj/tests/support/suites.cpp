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


#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>

#include "evderain/autodiff/grad_check.hpp"
#include "evderain/autodiff/ops.hpp"
#include "evderain/curves.hpp"
#include "evderain/loss_metrics.hpp"
#include "evderain/model.hpp"
#include "evderain/ssm.hpp"

namespace evderain::testing {

namespace {

using ad::Tensor;

class Source {
 public:
  explicit Source(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  Tensor tensor(ad::Shape shape, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(ad::numel(shape));
    for (auto& x : v) x = uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(v));
  }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

 private:
  std::mt19937_64 rng_;
};

CheckResult run(const std::string& name, const ad::ScalarFunction& f, std::vector<Tensor> inputs, double tol) {
  const auto report = ad::grad_check(f, std::move(inputs), 1e-5, tol);
  return {name, report.max_rel_error, tol, report.ok};
}

}  // namespace

std::vector<Event> random_events(std::uint64_t seed, std::size_t n, std::uint32_t width, std::uint32_t height,
                                 std::uint64_t duration_us) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> times(n);
  for (auto& t : times) t = rng() % duration_us;
  std::sort(times.begin(), times.end());
  std::vector<Event> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(Event{static_cast<std::uint32_t>(rng() % width), static_cast<std::uint32_t>(rng() % height), times[i],
                        static_cast<std::int8_t>(rng() % 2 ? 1 : -1), static_cast<std::uint8_t>(rng() % 2)});
  }
  return out;
}

std::vector<CheckResult> gradient_suite(std::uint64_t seed) {
  constexpr double kOpTol = 1e-4;
  constexpr double kEndToEndTol = 1e-3;
  Source src(seed);
  std::vector<CheckResult> out;

  auto unary = [&](const std::string& name, std::function<Tensor(const Tensor&)> op, ad::Shape shape, double lo,
                   double hi) {
    const Tensor input = src.tensor(shape, lo, hi);
    const Tensor w = src.tensor(op(input).shape());
    out.push_back(run(
        name, [op, w](std::span<const Tensor> in) { return ad::sum(ad::mul(op(in[0]), w)); }, {input}, kOpTol));
  };
  unary("square", [](const Tensor& a) { return ad::square(a); }, {7, 5}, -2, 2);
  unary("exp", [](const Tensor& a) { return ad::exp(a); }, {6, 4}, -2, 2);
  unary("log", [](const Tensor& a) { return ad::log(a); }, {6, 4}, 0.2, 3);
  unary("sigmoid", [](const Tensor& a) { return ad::sigmoid(a); }, {6, 4}, -6, 6);
  unary("silu", [](const Tensor& a) { return ad::silu(a); }, {6, 4}, -6, 6);
  unary("softplus", [](const Tensor& a) { return ad::softplus(a); }, {6, 4}, -6, 6);
  unary("add_scalar", [](const Tensor& a) { return ad::add_scalar(a, 0.7); }, {5}, -1, 1);
  unary("mul_scalar", [](const Tensor& a) { return ad::mul_scalar(a, -1.3); }, {5}, -1, 1);
  unary("transpose", [](const Tensor& a) { return ad::transpose(a); }, {3, 7}, -1, 1);
  unary("softmax axis 0", [](const Tensor& a) { return ad::softmax(a, 0); }, {4, 6}, -3, 3);
  unary("softmax axis 1", [](const Tensor& a) { return ad::softmax(a, 1); }, {4, 6}, -3, 3);
  unary("slice axis 1", [](const Tensor& a) { return ad::slice(a, 1, 2, 5); }, {3, 7}, -1, 1);
  unary("slice axis 0", [](const Tensor& a) { return ad::slice(a, 0, 1, 3); }, {4, 3}, -1, 1);
  unary("mean", [](const Tensor& a) { return ad::mean(a); }, {4, 5}, -1, 1);
  unary("rfft_magnitude", [](const Tensor& a) { return ad::rfft_magnitude(a); }, {13}, -1, 1);
  // Large elementwise case, 10^4 elements.
  unary("silu 100x100", [](const Tensor& a) { return ad::silu(a); }, {100, 100}, -4, 4);

  auto binary = [&](const std::string& name, std::function<Tensor(const Tensor&, const Tensor&)> op,
                    ad::Shape sa, ad::Shape sb) {
    Tensor probe = op(src.tensor(sa), src.tensor(sb));
    const Tensor w = src.tensor(probe.shape());
    out.push_back(run(
        name, [op, w](std::span<const Tensor> in) { return ad::sum(ad::mul(op(in[0], in[1]), w)); },
        {src.tensor(sa), src.tensor(sb)}, kOpTol));
  };
  binary("add", [](const Tensor& a, const Tensor& b) { return ad::add(a, b); }, {4, 3}, {4, 3});
  binary("sub", [](const Tensor& a, const Tensor& b) { return ad::sub(a, b); }, {4, 3}, {4, 3});
  binary("mul", [](const Tensor& a, const Tensor& b) { return ad::mul(a, b); }, {4, 3}, {4, 3});
  binary("matmul", [](const Tensor& a, const Tensor& b) { return ad::matmul(a, b); }, {3, 5}, {5, 4});
  binary("concat axis 0", [](const Tensor& a, const Tensor& b) { return ad::concat(std::vector{a, b}, 0); }, {2, 5},
         {3, 5});
  binary("concat axis 1", [](const Tensor& a, const Tensor& b) { return ad::concat(std::vector{a, b}, 1); }, {3, 2},
         {3, 4});
  binary("mul 100x100", [](const Tensor& a, const Tensor& b) { return ad::mul(a, b); }, {100, 100}, {100, 100});

  {
    const Tensor w = src.tensor({4, 9});
    out.push_back(run(
        "linear",
        [w](std::span<const Tensor> in) { return ad::sum(ad::mul(ad::linear(in[0], in[1], in[2]), w)); },
        {src.tensor({3, 9}), src.tensor({4, 3}), src.tensor({4})}, kOpTol));
  }
  {
    const Tensor w = src.tensor({4, 11});
    out.push_back(run(
        "conv1d dense",
        [w](std::span<const Tensor> in) { return ad::sum(ad::mul(ad::conv1d(in[0], in[1], in[2]), w)); },
        {src.tensor({3, 11}), src.tensor({4, 3, 5}), src.tensor({4})}, kOpTol));
  }
  {
    const Tensor w = src.tensor({3, 11});
    out.push_back(run(
        "conv1d depthwise",
        [w](std::span<const Tensor> in) { return ad::sum(ad::mul(ad::conv1d(in[0], in[1], in[2], true), w)); },
        {src.tensor({3, 11}), src.tensor({3, 3}), src.tensor({3})}, kOpTol));
  }
  {
    const Tensor w = src.tensor({4, 32});
    out.push_back(run(
        "conv1d + silu (4 x 32)",
        [w](std::span<const Tensor> in) { return ad::sum(ad::mul(ad::silu(ad::conv1d(in[0], in[1])), w)); },
        {src.tensor({4, 32}), src.tensor({4, 4, 3})}, kOpTol));
  }
  for (const auto mode : {ad::Mode::train, ad::Mode::eval}) {
    const Tensor w = src.tensor({3, 10});
    const Tensor rm = src.tensor({3}), rv = src.tensor({3}, 0.5, 2.0);
    out.push_back(run(
        mode == ad::Mode::train ? "batchnorm1d train" : "batchnorm1d eval",
        [w, rm, rv, mode](std::span<const Tensor> in) {
          ad::BatchNormStats stats{rm.clone(), rv.clone()};
          return ad::sum(ad::mul(ad::batchnorm1d(in[0], in[1], in[2], stats, mode), w));
        },
        {src.tensor({3, 10}), src.tensor({3}, 0.5, 1.5), src.tensor({3})}, kOpTol));
  }
  {
    const std::vector<std::size_t> idx{2, 0, 0, 4, 1, 2, 3};
    const Tensor w = src.tensor({3, idx.size()});
    out.push_back(run(
        "embedding_lookup",
        [idx, w](std::span<const Tensor> in) { return ad::sum(ad::mul(ad::embedding_lookup(in[0], idx), w)); },
        {src.tensor({3, 5})}, kOpTol));
  }
  {
    const std::vector<std::size_t> seg{0, 0, 2, 2, 2, 3};
    const Tensor w = src.tensor({3, 4});
    out.push_back(run(
        "segment_mean",
        [seg, w](std::span<const Tensor> in) { return ad::sum(ad::mul(ad::segment_mean(in[0], seg, 4), w)); },
        {src.tensor({3, seg.size()})}, kOpTol));
  }
  {
    const std::size_t C = 3, L = 40, N = 4;
    const Tensor w = src.tensor({C, L});
    out.push_back(run(
        "selective_scan",
        [w](std::span<const Tensor> in) {
          ssm::ScanParams p{in[1], in[2], in[3], in[4], in[5]};
          return ad::sum(ad::mul(ssm::selective_scan(in[0], p), w));
        },
        {src.tensor({C, L}), src.tensor({C, L}, 0.05, 0.5), src.tensor({C, N}, -2.0, -0.2), src.tensor({N, L}),
         src.tensor({N, L}), src.tensor({C})},
        kOpTol));
  }
  {
    const std::size_t C = 4, L = 24, N = 3;
    const Tensor w = src.tensor({C, L});
    out.push_back(run(
        "ssm projections + scan",
        [w](std::span<const Tensor> in) {
          ssm::SsmWeights sw{in[1], in[2], in[3], in[4], in[5], in[6]};
          return ad::sum(ad::mul(ssm::ssm_forward(in[0], sw), w));
        },
        {src.tensor({C, L}), src.tensor({C, C}, -0.5, 0.5), src.tensor({C}, -2, -1), src.tensor({N, C}),
         src.tensor({N, C}), src.tensor({C, N}, -0.5, 0.5), src.tensor({C})},
        kOpTol));
  }

  // Losses. Probabilities come from a softmax so the inputs stay interior.
  {
    const std::size_t n = 16;
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint8_t>(src.index(2));
    out.push_back(run(
        "ce_loss",
        [labels](std::span<const Tensor> in) { return ce_loss(ad::transpose(ad::softmax(in[0], 0)), labels); },
        {src.tensor({2, n}, -2, 2)}, kOpTol));
    std::vector<double> y(labels.begin(), labels.end());
    LossConfig cfg;
    cfg.eps = 50.0;  // keep the clamp active: the max itself is not differentiated
    out.push_back(run(
        "fft_loss",
        [y, cfg](std::span<const Tensor> in) { return fft_loss(ad::sigmoid(in[0]), y, cfg); },
        {src.tensor({n}, -2, 2)}, kOpTol));
    SequenceLayout layout;
    for (std::size_t i = 0; i < n; ++i) layout.order.push_back((i * 5) % n);
    layout.window_offsets = {0, 6, 6, n};
    out.push_back(run(
        "total_loss",
        [labels, cfg, layout](std::span<const Tensor> in) {
          return total_loss(ad::transpose(ad::softmax(in[0], 0)), labels, cfg, true, &layout).total;
        },
        {src.tensor({2, n}, -2, 2)}, kEndToEndTol));
  }

  // End-to-end micro network with the joint loss.
  {
    NetworkConfig cfg;
    cfg.widths = {4, 6};
    cfg.blocks_per_stage = 1;
    cfg.state_dim = 2;
    cfg.pool_cell = 4.0;
    cfg.max_windows = 3;
    const auto events = random_events(seed + 17, 24, 12, 10, 3000);
    const auto cloud = build_cloud(events, 0.001, 3, 12, 10);
    std::vector<std::uint8_t> labels;
    for (const auto& p : flatten(cloud)) labels.push_back(*p.label);
    const ModelParams init = init_params(cfg, seed);
    std::vector<std::string> names;
    std::vector<Tensor> inputs;
    for (const auto& [name, t] : init.tensors) {
      if (init.buffers.count(name)) continue;
      names.push_back(name);
      inputs.push_back(t.clone());
    }
    LossConfig loss;
    loss.eps = 50.0;
    out.push_back(run(
        "end-to-end network + joint loss",
        [=](std::span<const Tensor> in) {
          ModelParams p = init;
          for (auto& [name, t] : p.tensors) {
            if (p.buffers.count(name)) t = t.clone();
          }
          for (std::size_t i = 0; i < names.size(); ++i) p.tensors[names[i]] = in[i];
          const auto result = network_forward(cloud, cfg, p, ad::Mode::train);
          return total_loss(result.probs, labels, loss, true, &result.layout).total;
        },
        inputs, kEndToEndTol));
  }
  return out;
}

std::vector<CheckResult> ssm_suite(std::uint64_t seed) {
  Source src(seed);
  std::vector<CheckResult> out;
  constexpr double kTol = 1e-10;
  for (std::size_t L : {1, 2, 63, 64, 65, 1000}) {
    for (int trial = 0; trial < 3; ++trial) {
      const std::size_t C = 1 + src.index(4), N = 1 + src.index(8);
      const Tensor x = src.tensor({C, L}, -2, 2), delta = src.tensor({C, L}, 0.001, 1.0);
      const Tensor a = src.tensor({C, N}, -3.0, -0.01), b = src.tensor({N, L}), c = src.tensor({N, L});
      const Tensor d = src.tensor({C});
      const ssm::ScanParams p{delta, a, b, c, d};
      const Tensor ref = ssm::selective_scan(x, p);
      const auto view = ssm::make_view(x, p);
      const auto seq = ssm::scan_reference(view);
      for (std::size_t block : {std::size_t{1}, std::size_t{7}, std::size_t{64}, L}) {
        const auto y = ssm::scan_blocked(view, block);
        double err = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) err = std::max(err, std::abs(y[i] - ref[i]));
        if (block >= L) {
          const bool same = y == seq;
          out.push_back({"blocked == sequential bitwise, L=" + std::to_string(L), same ? 0.0 : err, 0.0, same});
        }
        out.push_back({"blocked vs sequential, L=" + std::to_string(L) + " block=" + std::to_string(block), err, kTol,
                       err <= kTol});
      }
    }
  }
  {
    // Causality: perturbing x beyond t leaves y up to t unchanged.
    const std::size_t C = 3, N = 4, L = 200;
    Tensor x = src.tensor({C, L});
    const ssm::ScanParams p{src.tensor({C, L}, 0.01, 0.5), src.tensor({C, N}, -2, -0.1), src.tensor({N, L}),
                            src.tensor({N, L}), src.tensor({C})};
    const auto before = ssm::scan_reference(ssm::make_view(x, p));
    bool causal = true;
    for (std::size_t t : {0UL, 57UL, 198UL}) {
      Tensor x2 = x.clone();
      auto v = x2.mutable_data();
      for (std::size_t ch = 0; ch < C; ++ch) {
        for (std::size_t s = t + 1; s < L; ++s) v[ch * L + s] += 10.0;
      }
      const auto after = ssm::scan_blocked(ssm::make_view(x2, p), 16);
      for (std::size_t ch = 0; ch < C; ++ch) {
        for (std::size_t s = 0; s <= t; ++s) {
          if (std::abs(after[ch * L + s] - before[ch * L + s]) > 1e-12) causal = false;
        }
      }
    }
    out.push_back({"causality", 0.0, 0.0, causal});
  }
  {
    const ssm::ScanParams p{Tensor::from({1, 2}, {1, 1}), Tensor::from({1, 1}, {-1}), Tensor::from({1, 2}, {1, 1}),
                            Tensor::from({1, 2}, {1, 1}), Tensor::from({1}, {0})};
    const auto y = ssm::selective_scan(Tensor::from({1, 2}, {1, 0}), p);
    const double err = std::abs(y[1] - std::exp(-1.0));
    out.push_back({"unrolled example y2 = exp(-1)", err, 1e-15, err <= 1e-15});
    const ssm::ScanParams p1{Tensor::from({1, 1}, {1}), Tensor::from({1, 1}, {-1}), Tensor::from({1, 1}, {1}),
                             Tensor::from({1, 1}, {1}), Tensor::from({1}, {0})};
    const double e1 = std::abs(ssm::selective_scan(Tensor::from({1, 1}, {2}), p1)[0] - 2.0);
    out.push_back({"single step y = 2", e1, 0.0, e1 == 0.0});
  }
  {
    // Unit input over 10^6 steps stays bounded.
    const std::size_t L = 1000000;
    const std::vector<double> x(L, 1.0), delta(L, 0.1), a{-0.5}, b(L, 1.0), c(L, 1.0), d{0.0};
    const auto y = ssm::scan_blocked(ssm::ScanView{1, L, 1, x, delta, a, b, c, d}, 4096);
    double peak = 0.0;
    bool finite = true;
    for (double v : y) {
      finite = finite && std::isfinite(v);
      peak = std::max(peak, std::abs(v));
    }
    // Fixed point of h = e^{-0.05} h + 0.1 is 0.1 / (1 - e^{-0.05}).
    const double bound = 0.1 / (1.0 - std::exp(-0.05)) + 1e-9;
    out.push_back({"bounded over 1e6 steps", peak, bound, finite && peak <= bound});
  }
  return out;
}

std::vector<CheckResult> curve_suite() {
  std::vector<CheckResult> out;
  bool morton_ok = true, hilbert_ok = true;
  std::set<std::uint64_t> mk, hk;
  for (std::uint32_t x = 0; x < 16; ++x) {
    for (std::uint32_t y = 0; y < 16; ++y) {
      for (std::uint32_t z = 0; z < 16; ++z) {
        const auto m = morton_encode(x, y, z, 4);
        const auto h = hilbert_encode(x, y, z, 4);
        morton_ok = morton_ok && morton_decode(m, 4) == GridCoord{x, y, z} && m < 4096;
        hilbert_ok = hilbert_ok && hilbert_decode(h, 4) == GridCoord{x, y, z} && h < 4096;
        mk.insert(m);
        hk.insert(h);
      }
    }
  }
  out.push_back({"morton bijective on 16^3", 0.0, 0.0, morton_ok && mk.size() == 4096});
  out.push_back({"hilbert bijective on 16^3", 0.0, 0.0, hilbert_ok && hk.size() == 4096});
  bool adjacent = hilbert_encode(0, 0, 0, 3) == 0;
  auto prev = hilbert_decode(0, 3);
  for (std::uint64_t k = 1; k < 512; ++k) {
    const auto cur = hilbert_decode(k, 3);
    int dist = 0;
    for (int d = 0; d < 3; ++d) dist += std::abs(static_cast<int>(cur[d]) - static_cast<int>(prev[d]));
    adjacent = adjacent && dist == 1;
    prev = cur;
  }
  out.push_back({"hilbert unit steps on 8^3", 0.0, 0.0, adjacent});
  const std::array<std::uint32_t, 2> xy{3, 5};
  out.push_back({"morton 2d (3, 5) = 39", 0.0, 0.0, morton_encode(xy, 3) == 39});
  return out;
}

double naive_fft_loss(std::span<const double> p, std::span<const double> y, double eps, double eps_prime) {
  std::size_t L = 1;
  while (L < p.size()) L <<= 1;
  std::vector<double> d(L, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) d[i] = p[i] - y[i];
  std::vector<double> mag(L);
  for (std::size_t k = 0; k < L; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < L; ++n) {
      acc += d[n] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * n % L) / static_cast<double>(L));
    }
    mag[k] = std::abs(acc);
  }
  const double m = std::max(*std::max_element(mag.begin(), mag.end()), eps);
  double sum = 0.0;
  for (double v : mag) sum += (v / m + eps_prime) * (v / m + eps_prime);
  return sum / static_cast<double>(L);
}

std::vector<CheckResult> loss_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LossConfig cfg;
  cfg.eps = 1e-8;
  cfg.eps_prime = 1e-3;

  double identity = 0.0;
  for (std::size_t L = 1; L <= 256; ++L) {
    std::vector<double> y(L);
    for (auto& v : y) v = static_cast<double>(rng() % 2);
    const double got = fft_loss(ad::Tensor::from({L}, y), y, cfg).item();
    identity = std::max(identity, std::abs(got - cfg.eps_prime * cfg.eps_prime));
  }
  out.push_back({"fft_loss(P = Y) = eps'^2", identity, 1e-12, identity <= 1e-12});

  double oracle = 0.0;
  for (std::size_t L = 1; L <= 256; ++L) {
    std::vector<double> p(L), y(L);
    for (std::size_t i = 0; i < L; ++i) {
      p[i] = u(rng);
      y[i] = static_cast<double>(rng() % 2);
    }
    const double got = fft_loss(ad::Tensor::from({L}, p), y, cfg).item();
    oracle = std::max(oracle, std::abs(got - naive_fft_loss(p, y, cfg.eps, cfg.eps_prime)));
  }
  out.push_back({"fft_loss vs direct DFT, L <= 256", oracle, 1e-9, oracle <= 1e-9});

  bool bitwise = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t N = 1 + rng() % 200;
    std::vector<double> probs(2 * N);
    std::vector<std::uint8_t> labels(N);
    for (std::size_t i = 0; i < N; ++i) {
      probs[2 * i + 1] = u(rng);
      probs[2 * i] = 1.0 - probs[2 * i + 1];
      labels[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    const auto t = ad::Tensor::from({N, 2}, probs);
    LossConfig zero = cfg;
    zero.lambda = 0.0;
    bitwise = bitwise && total_loss(t, labels, zero, true).total.item() == ce_loss(t, labels).item();
  }
  out.push_back({"total_loss(lambda = 0) == ce_loss bitwise", 0.0, 0.0, bitwise});
  return out;
}

std::vector<CheckResult> metric_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  // Builds a shuffled prediction/label pair with the given confusion counts.
  auto build = [&](std::size_t pb, std::size_t tb, std::size_t pr, std::size_t tr) {
    std::vector<std::pair<std::uint8_t, std::uint8_t>> pairs;
    for (std::size_t i = 0; i < tb; ++i) pairs.emplace_back(i < pb ? 0 : 1, 0);
    for (std::size_t i = 0; i < tr; ++i) pairs.emplace_back(i < pr ? 1 : 0, 1);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::vector<std::uint8_t> p, l;
    for (auto [a, b] : pairs) {
      p.push_back(a);
      l.push_back(b);
    }
    return evaluate(p, l);
  };
  auto exact = [](const EvalReport& r, std::size_t pb, std::size_t tb, std::size_t pr, std::size_t tr, double sr,
                  double nr, double da) {
    return r.pb == pb && r.tb == tb && r.pr == pr && r.tr == tr && r.sr && *r.sr == sr && r.nr && *r.nr == nr &&
           r.da && std::abs(*r.da - da) <= 1e-15;
  };
  out.push_back({"TB 10 TR 10 PB 8 PR 9 -> 0.8 0.9 0.85", 0.0, 0.0,
                 exact(build(8, 10, 9, 10), 8, 10, 9, 10, 0.8, 0.9, 0.85)});
  out.push_back({"perfect -> 1 1 1", 0.0, 0.0, exact(build(37, 37, 21, 21), 37, 37, 21, 21, 1.0, 1.0, 1.0)});
  out.push_back({"all background -> 1 0 0.5", 0.0, 0.0, exact(build(50, 50, 0, 50), 50, 50, 0, 50, 1.0, 0.0, 0.5)});
  out.push_back({"all rain -> 0 1 0.5", 0.0, 0.0, exact(build(0, 50, 50, 50), 0, 50, 50, 50, 0.0, 1.0, 0.5)});
  bool random_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t tb = 1 + rng() % 300, tr = 1 + rng() % 300;
    const std::size_t pb = rng() % (tb + 1), pr = rng() % (tr + 1);
    const double sr = static_cast<double>(pb) / static_cast<double>(tb);
    const double nr = static_cast<double>(pr) / static_cast<double>(tr);
    random_ok = random_ok && exact(build(pb, tb, pr, tr), pb, tb, pr, tr, sr, nr, 0.5 * (sr + nr));
  }
  out.push_back({"200 random confusion matrices", 0.0, 0.0, random_ok});
  bool undefined = false;
  try {
    evaluate(std::vector<std::uint8_t>{0, 1}, std::vector<std::uint8_t>{0, 0});
  } catch (const UndefinedMetricError& e) {
    undefined = e.report().sr && *e.report().sr == 0.5 && !e.report().da;
  }
  out.push_back({"TR = 0 is undefined with partial report", 0.0, 0.0, undefined});
  return out;
}

}  // namespace evderain::testing
