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


#include "evderain/autodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "evderain/errors.hpp"

namespace evderain::ad {

namespace {

constexpr char kMagic[8] = {'E', 'V', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  nlohmann::json index;
  index["meta"] = checkpoint.meta;
  index["tensors"] = nlohmann::json::array();
  std::string payload;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    index["tensors"].push_back({{"name", name},
                                {"shape", tensor.shape()},
                                {"offset", payload.size()},
                                {"count", tensor.size()}});
    for (double v : tensor.data()) put_u64(payload, std::bit_cast<std::uint64_t>(v));
  }
  const std::string json = index.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_u64(out, json.size());
  out += json;
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const std::uint64_t json_len = get_u64(bytes, 8);
  if (16 + json_len > bytes.size()) throw CheckpointError("truncated checkpoint index");
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(bytes.substr(16, json_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint index: ") + e.what());
  }
  const std::size_t base = 16 + json_len;
  Checkpoint ck;
  ck.meta = index.value("meta", nlohmann::json::object());
  for (const auto& entry : index.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto count = entry.at("count").get<std::size_t>();
    if (numel(shape) != count || base + offset + count * 8 > bytes.size()) {
      throw CheckpointError("tensor '" + name + "' does not fit the payload");
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<double>(get_u64(bytes, base + offset + 8 * i));
    ck.tensors.emplace(name, Tensor::from(shape, std::move(values)));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace evderain::ad
