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

#include <complex>
#include <cstddef>
#include <vector>

namespace evderain::ad {

std::size_t next_pow2(std::size_t n);

/// In-place iterative radix-2 FFT, unnormalized in both directions
/// (sign -1 forward, +1 inverse). Size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse = false);

}  // namespace evderain::ad
