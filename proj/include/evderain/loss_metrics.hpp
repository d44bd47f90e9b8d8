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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evderain/autodiff/tensor.hpp"
#include "evderain/errors.hpp"

namespace evderain {

struct LossConfig {
  double lambda = 0.1;
  /// Floor of the normalizing maximum, in spectral magnitude units. One
  /// misclassified event has magnitude 1 in every bin; much smaller floors
  /// let the frequency gradient grow without bound as the fit improves.
  double eps = 1.0;
  double eps_prime = 1e-3;   // additive offset inside the square
};

void validate(const LossConfig& cfg);

/// Probabilities at or below this are clamped before the logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

/// Mean negative log-probability of the true class for (N x 2) probabilities.
ad::Tensor ce_loss(const ad::Tensor& probs, std::span<const std::uint8_t> labels);

/// Frequency-domain alignment between a predicted rain-probability sequence
/// and its binary labels. Both are zero-padded to the next power of two L';
/// with D = |F(P) - F(Y)| over the full spectrum and m = max(max_i D_i, eps),
///   loss = (1/L') * sum_i (D_i / m + eps')^2.
/// The maximum is held constant for differentiation. Throws ContractError on
/// empty or mismatched input.
ad::Tensor fft_loss(const ad::Tensor& predicted, std::span<const double> labels, const LossConfig& cfg);

/// Serialized order of a cloud split into its temporal windows:
/// order[window_offsets[w] .. window_offsets[w + 1]) are the events of window w.
struct SequenceLayout {
  std::vector<std::size_t> order;
  std::vector<std::size_t> window_offsets;
};

/// fft_loss per non-empty window along the serialized order, averaged.
ad::Tensor windowed_fft_loss(const ad::Tensor& probs, std::span<const std::uint8_t> labels,
                             const SequenceLayout& layout, const LossConfig& cfg);

struct LossParts {
  ad::Tensor total;
  double ce = 0.0;
  double fft = 0.0;  // unweighted; 0 when skipped
};

/// ce + lambda * fft. The frequency term is skipped entirely when
/// `use_fft_loss` is false or lambda is 0, so the result is then the
/// cross-entropy tensor itself. Without a layout the whole input order is one
/// window.
LossParts total_loss(const ad::Tensor& probs, std::span<const std::uint8_t> labels, const LossConfig& cfg,
                     bool use_fft_loss, const SequenceLayout* layout = nullptr);

/// Counts use label 0 = background, 1 = rain.
struct EvalReport {
  std::size_t pb = 0;  // predicted 0 and labeled 0
  std::size_t tb = 0;  // labeled 0
  std::size_t pr = 0;  // predicted 1 and labeled 1
  std::size_t tr = 0;  // labeled 1
  std::optional<double> sr;
  std::optional<double> nr;
  std::optional<double> da;
};

nlohmann::json to_json(const EvalReport& report);

/// Thrown when TB or TR is zero; `report()` carries the defined subset.
class UndefinedMetricError : public Error {
 public:
  UndefinedMetricError(EvalReport report, const std::string& what)
      : Error("undefined_metric", what), report_(std::move(report)) {}
  const EvalReport& report() const noexcept { return report_; }

 private:
  EvalReport report_;
};

EvalReport evaluate(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

struct LabelSpectrum {
  /// Summed power |F(Y)_k|^2 per equal-width bin of normalized frequency
  /// k / L' over [0, 0.5].
  std::vector<double> binned_power;
  std::vector<double> bin_centers;
  /// Raw power for k = 0 .. L'/2.
  std::vector<double> power;
  /// argmax_{k >= 1} power_k / L'; 0 when the sequence has no non-DC power.
  double peak_frequency = 0.0;
  std::map<std::size_t, std::size_t> run_lengths;  // run length of 1s -> count

  double median_run_length() const;
};

/// Throws ContractError when fewer than two labels or zero bins.
LabelSpectrum label_spectrum(std::span<const std::uint8_t> labels, std::size_t bins);

std::string spectrum_csv(const LabelSpectrum& spectrum);
std::string run_length_csv(const LabelSpectrum& spectrum);

}  // namespace evderain
