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


#include "evderain/loss_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "evderain/autodiff/fft.hpp"
#include "evderain/autodiff/ops.hpp"

namespace evderain {

void validate(const LossConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) throw ConfigError("loss lambda must be >= 0");
  if (!(cfg.eps > 0.0) || !(cfg.eps_prime > 0.0)) throw ConfigError("loss eps and eps_prime must be > 0");
}

ad::Tensor ce_loss(const ad::Tensor& probs, std::span<const std::uint8_t> labels) {
  if (probs.rank() != 2 || probs.dim(1) != 2) {
    throw ShapeError("ce_loss: expected (N x 2) probabilities, got " + ad::shape_string(probs.shape()));
  }
  const std::size_t N = probs.dim(0);
  if (labels.size() != N) {
    throw ShapeError("ce_loss: " + std::to_string(labels.size()) + " labels for " + std::to_string(N) + " rows");
  }
  if (N == 0) throw ContractError("ce_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (labels[i] > 1) throw ContractError("ce_loss: labels must be binary");
    total -= std::log(std::max(probs[i * 2 + labels[i]], kProbabilityFloor));
  }
  std::vector<std::uint8_t> y(labels.begin(), labels.end());
  return ad::make_result("ce_loss", {}, {total / static_cast<double>(N)}, {probs}, [N, y = std::move(y)](ad::Node& self) {
    ad::Node& np = *self.inputs[0];
    if (!np.requires_grad) return;
    auto& g = np.ensure_grad();
    const double scale = self.grad[0] / static_cast<double>(N);
    for (std::size_t i = 0; i < N; ++i) {
      const double p = np.value[i * 2 + y[i]];
      if (p > kProbabilityFloor) g[i * 2 + y[i]] -= scale / p;
    }
  });
}

ad::Tensor fft_loss(const ad::Tensor& predicted, std::span<const double> labels, const LossConfig& cfg) {
  const std::size_t L = predicted.size();
  if (L == 0) throw ContractError("fft_loss: empty sequence");
  if (labels.size() != L) {
    throw ContractError("fft_loss: " + std::to_string(L) + " predictions vs " + std::to_string(labels.size()) +
                        " labels");
  }
  const ad::Tensor target =
      ad::Tensor::from(predicted.shape(), std::vector<double>(labels.begin(), labels.end()));
  const ad::Tensor mag = ad::rfft_magnitude(ad::sub(predicted, target));
  const std::size_t padded = ad::next_pow2(L);
  const std::size_t bins = mag.size();
  double peak = 0.0;
  for (double v : mag.data()) peak = std::max(peak, v);
  const double denom = std::max(peak, cfg.eps);
  // Full-spectrum multiplicity of each one-sided bin.
  std::vector<double> weights(bins, 2.0);
  weights.front() = 1.0;
  if (padded >= 2) weights.back() = 1.0;
  const ad::Tensor w = ad::Tensor::from({bins}, std::move(weights));
  const ad::Tensor terms = ad::square(ad::add_scalar(ad::mul_scalar(mag, 1.0 / denom), cfg.eps_prime));
  return ad::mul_scalar(ad::sum(ad::mul(terms, w)), 1.0 / static_cast<double>(padded));
}

ad::Tensor windowed_fft_loss(const ad::Tensor& probs, std::span<const std::uint8_t> labels,
                             const SequenceLayout& layout, const LossConfig& cfg) {
  const std::size_t N = probs.dim(0);
  if (layout.order.size() != N || layout.window_offsets.empty() || layout.window_offsets.back() != N) {
    throw ContractError("windowed_fft_loss: layout does not cover the " + std::to_string(N) + " events");
  }
  // Row 1 of the transposed probabilities is P(rain) per event.
  const ad::Tensor rain = ad::slice(ad::gather_cols(ad::transpose(probs), layout.order), 0, 1, 2);
  ad::Tensor acc;
  std::size_t used = 0;
  for (std::size_t w = 0; w + 1 < layout.window_offsets.size(); ++w) {
    const std::size_t begin = layout.window_offsets[w], end = layout.window_offsets[w + 1];
    if (begin == end) continue;
    std::vector<double> y(end - begin);
    for (std::size_t i = begin; i < end; ++i) y[i - begin] = labels[layout.order[i]];
    const ad::Tensor segment = ad::slice(rain, 1, begin, end);
    const ad::Tensor term = fft_loss(segment, y, cfg);
    acc = acc.defined() ? ad::add(acc, term) : term;
    ++used;
  }
  if (!used) throw ContractError("windowed_fft_loss: no events");
  return ad::mul_scalar(acc, 1.0 / static_cast<double>(used));
}

LossParts total_loss(const ad::Tensor& probs, std::span<const std::uint8_t> labels, const LossConfig& cfg,
                     bool use_fft_loss, const SequenceLayout* layout) {
  LossParts parts;
  const ad::Tensor ce = ce_loss(probs, labels);
  parts.ce = ce.item();
  if (!use_fft_loss || cfg.lambda == 0.0) {
    parts.total = ce;
    return parts;
  }
  ad::Tensor fft;
  if (layout) {
    fft = windowed_fft_loss(probs, labels, *layout, cfg);
  } else {
    SequenceLayout whole;
    whole.order.resize(probs.dim(0));
    for (std::size_t i = 0; i < whole.order.size(); ++i) whole.order[i] = i;
    whole.window_offsets = {0, whole.order.size()};
    fft = windowed_fft_loss(probs, labels, whole, cfg);
  }
  parts.fft = fft.item();
  parts.total = ad::add(ce, ad::mul_scalar(fft, cfg.lambda));
  return parts;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["PB"] = r.pb;
  j["TB"] = r.tb;
  j["PR"] = r.pr;
  j["TR"] = r.tr;
  j["SR"] = r.sr ? nlohmann::json(*r.sr) : nlohmann::json(nullptr);
  j["NR"] = r.nr ? nlohmann::json(*r.nr) : nlohmann::json(nullptr);
  j["DA"] = r.da ? nlohmann::json(*r.da) : nlohmann::json(nullptr);
  return j;
}

EvalReport evaluate(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) {
    throw ContractError("evaluate: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
  }
  EvalReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1 || predictions[i] > 1) throw ContractError("evaluate: values must be 0 or 1");
    if (labels[i] == 0) {
      ++r.tb;
      if (predictions[i] == 0) ++r.pb;
    } else {
      ++r.tr;
      if (predictions[i] == 1) ++r.pr;
    }
  }
  if (r.tb) r.sr = static_cast<double>(r.pb) / static_cast<double>(r.tb);
  if (r.tr) r.nr = static_cast<double>(r.pr) / static_cast<double>(r.tr);
  if (r.sr && r.nr) r.da = 0.5 * (*r.sr + *r.nr);
  if (!r.tb || !r.tr) {
    throw UndefinedMetricError(r, r.tb ? "no rain events in labels (TR = 0)" : "no background events in labels (TB = 0)");
  }
  return r;
}

double LabelSpectrum::median_run_length() const {
  std::size_t total = 0;
  for (const auto& [len, count] : run_lengths) total += count;
  if (!total) return 0.0;
  // Median of the multiset of run lengths; mean of the two middle values.
  auto nth = [&](std::size_t k) {
    std::size_t seen = 0;
    for (const auto& [len, count] : run_lengths) {
      seen += count;
      if (k < seen) return static_cast<double>(len);
    }
    return static_cast<double>(run_lengths.rbegin()->first);
  };
  return total % 2 ? nth(total / 2) : 0.5 * (nth(total / 2 - 1) + nth(total / 2));
}

LabelSpectrum label_spectrum(std::span<const std::uint8_t> labels, std::size_t bins) {
  if (labels.size() < 2) throw ContractError("label_spectrum: need at least two labels");
  if (bins == 0) throw ContractError("label_spectrum: need at least one bin");
  const std::size_t padded = ad::next_pow2(labels.size());
  std::vector<std::complex<double>> F(padded);
  for (std::size_t i = 0; i < labels.size(); ++i) F[i] = labels[i];
  ad::fft_inplace(F);

  LabelSpectrum s;
  const std::size_t half = padded / 2;
  s.power.resize(half + 1);
  s.binned_power.assign(bins, 0.0);
  s.bin_centers.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) s.bin_centers[b] = 0.5 * (static_cast<double>(b) + 0.5) / static_cast<double>(bins);
  std::size_t peak_bin = 0;
  for (std::size_t k = 0; k <= half; ++k) {
    s.power[k] = std::norm(F[k]);
    const double f = static_cast<double>(k) / static_cast<double>(padded);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(f / 0.5 * static_cast<double>(bins)));
    s.binned_power[b] += s.power[k];
    if (k >= 1 && s.power[k] > (peak_bin ? s.power[peak_bin] : 0.0)) peak_bin = k;
  }
  s.peak_frequency = static_cast<double>(peak_bin) / static_cast<double>(padded);

  std::size_t run = 0;
  for (auto v : labels) {
    if (v) {
      ++run;
    } else if (run) {
      ++s.run_lengths[run];
      run = 0;
    }
  }
  if (run) ++s.run_lengths[run];
  return s;
}

std::string spectrum_csv(const LabelSpectrum& s) {
  std::ostringstream out;
  out.precision(17);
  out << "bin_hz_normalized,power\n";
  for (std::size_t b = 0; b < s.binned_power.size(); ++b) out << s.bin_centers[b] << ',' << s.binned_power[b] << '\n';
  return out.str();
}

std::string run_length_csv(const LabelSpectrum& s) {
  std::ostringstream out;
  out << "run_length,count\n";
  for (const auto& [len, count] : s.run_lengths) out << len << ',' << count << '\n';
  return out.str();
}

}  // namespace evderain
