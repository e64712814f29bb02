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

#ifndef SPOOFBENCH_CHECKPOINT_H_
#define SPOOFBENCH_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spoofbench/nn/module.h"
#include "spoofbench/nn/tensor.h"

namespace spoofbench {

// Binary model container:
//
//   "SPBCKPT\0"                 8-byte magic
//   uint32 format_version       little-endian, currently 1
//   uint64 header_bytes
//   header                      UTF-8 JSON: {"format_version", "kind",
//                               "config": {...}, "tensors": [{"name",
//                               "shape"}, ...]}
//   payload                     float64 little-endian values, tensors in
//                               header order
//
// The JSON header must repeat format_version; files without it are rejected.
struct Checkpoint {
  nlohmann::json header = nlohmann::json::object();
  std::vector<std::pair<std::string, nn::Tensor>> tensors;
};

inline constexpr uint32_t kCheckpointFormatVersion = 1;

std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Snapshot of a module's state (parameters and buffers) under `kind`.
Checkpoint CheckpointFromModule(const nn::Module& module, std::string kind,
                                nlohmann::json config);
// Byte serialization of a module's state; equal bytes <=> equal state.
std::string SerializeModuleState(const nn::Module& module);

}  // namespace spoofbench

#endif  // SPOOFBENCH_CHECKPOINT_H_
