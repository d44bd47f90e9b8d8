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

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "evderain/autodiff/tensor.hpp"

namespace evderain::ad {

/// Named tensors plus free-form metadata.
///
/// Byte layout (all integers little-endian):
///   [0, 8)        magic "EVCKPT01"
///   [8, 16)       u64 J, length of the JSON index
///   [16, 16+J)    UTF-8 JSON: {"meta": {...}, "tensors": [{"name", "shape",
///                 "offset", "count"}, ...]} with tensors in name order and
///                 offsets in bytes relative to the payload start
///   [16+J, ...)   payload: IEEE-754 fp64 values, little-endian, row-major
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  nlohmann::json meta = nlohmann::json::object();
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws MissingFileError or CheckpointError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace evderain::ad
