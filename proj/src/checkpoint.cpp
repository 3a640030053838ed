// Copyright 2026 The RAWtoBit Authors.
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

#include "rawtobit/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace rtb {

namespace {

constexpr char kMagic[4] = {'R', 'B', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) fail(ErrorCode::kFormatError, "truncated checkpoint");
  return v;
}

}  // namespace

std::map<std::string, Tensor> Checkpoint::tensor_map() const {
  std::map<std::string, Tensor> m;
  for (const auto& [name, t] : tensors) m[name] = t;
  return m;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIoError, "cannot open for writing: " + path);
  f.write(kMagic, 4);
  write_pod(f, kVersion);
  const std::string json = ckpt.config.dump();
  write_pod(f, uint64_t(json.size()));
  f.write(json.data(), long(json.size()));
  write_pod(f, uint32_t(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    write_pod(f, uint16_t(name.size()));
    f.write(name.data(), long(name.size()));
    write_pod(f, uint8_t(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) write_pod(f, uint32_t(t.dim(i)));
    f.write(reinterpret_cast<const char*>(t.data()),
            long(t.numel()) * long(sizeof(double)));
  }
  if (!f) fail(ErrorCode::kIoError, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIoError, "cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCode::kFormatError, "not a checkpoint file: " + path);
  const uint32_t version = read_pod<uint32_t>(f);
  if (version != kVersion)
    fail(ErrorCode::kFormatError, "unsupported checkpoint version");
  const uint64_t json_len = read_pod<uint64_t>(f);
  std::string json(json_len, '\0');
  f.read(json.data(), long(json_len));
  if (!f) fail(ErrorCode::kFormatError, "truncated checkpoint config");
  Checkpoint ckpt;
  ckpt.config = nlohmann::json::parse(json);
  const uint32_t count = read_pod<uint32_t>(f);
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t name_len = read_pod<uint16_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const uint8_t ndim = read_pod<uint8_t>(f);
    Shape shape;
    for (int d = 0; d < ndim; ++d) shape.push_back(int(read_pod<uint32_t>(f)));
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data()), long(t.numel()) * long(sizeof(double)));
    if (!f) fail(ErrorCode::kFormatError, "truncated checkpoint tensor " + name);
    ckpt.tensors.push_back({std::move(name), std::move(t)});
  }
  return ckpt;
}

}  // namespace rtb
