// Copyright (c) 2026 SpoofBench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spoofbench/checkpoint.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "spoofbench/error.h"

namespace spoofbench {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'B', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void AppendPod(std::string* out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out->append(buf, sizeof(T));
}

template <typename T>
T ReadPod(std::string_view bytes, size_t* pos) {
  if (*pos + sizeof(T) > bytes.size()) {
    throw ParseError("checkpoint truncated");
  }
  T v;
  std::memcpy(&v, bytes.data() + *pos, sizeof(T));
  *pos += sizeof(T);
  return v;
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  nlohmann::json header = ckpt.header;
  header["format_version"] = kCheckpointFormatVersion;
  nlohmann::json listing = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.tensors) {
    listing.push_back({{"name", name}, {"shape", t.shape()}});
  }
  header["tensors"] = listing;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  AppendPod<uint32_t>(&out, kCheckpointFormatVersion);
  AppendPod<uint64_t>(&out, text.size());
  out += text;
  for (const auto& [name, t] : ckpt.tensors) {
    out.append(reinterpret_cast<const char*>(t.data()),
               static_cast<size_t>(t.numel()) * sizeof(double));
  }
  return out;
}

Checkpoint DeserializeCheckpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint file (bad magic)");
  }
  size_t pos = sizeof(kMagic);
  const auto version = ReadPod<uint32_t>(bytes, &pos);
  if (version != kCheckpointFormatVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = ReadPod<uint64_t>(bytes, &pos);
  if (pos + header_len > bytes.size()) throw ParseError("checkpoint truncated");
  Checkpoint ckpt;
  try {
    ckpt.header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;
  if (!ckpt.header.contains("format_version") ||
      ckpt.header["format_version"].get<uint32_t>() != version) {
    throw ParseError("checkpoint header lacks a matching format_version");
  }
  if (!ckpt.header.contains("tensors")) {
    throw ParseError("checkpoint header lacks a tensor listing");
  }
  for (const auto& entry : ckpt.header["tensors"]) {
    nn::Shape shape = entry.at("shape").get<nn::Shape>();
    nn::Tensor t(shape);
    const size_t n = static_cast<size_t>(t.numel()) * sizeof(double);
    if (pos + n > bytes.size()) throw ParseError("checkpoint payload truncated");
    std::memcpy(t.data(), bytes.data() + pos, n);
    pos += n;
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  if (pos != bytes.size()) throw ParseError("trailing bytes after checkpoint payload");
  ckpt.header.erase("tensors");
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string bytes = SerializeCheckpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeCheckpoint(ss.str());
}

Checkpoint CheckpointFromModule(const nn::Module& module, std::string kind,
                                nlohmann::json config) {
  Checkpoint ckpt;
  ckpt.header["kind"] = std::move(kind);
  ckpt.header["config"] = std::move(config);
  for (const nn::StateEntry& e : module.State()) {
    ckpt.tensors.emplace_back(e.name, e.var.value());
  }
  return ckpt;
}

std::string SerializeModuleState(const nn::Module& module) {
  return SerializeCheckpoint(CheckpointFromModule(module, "state", {}));
}

}  // namespace spoofbench
