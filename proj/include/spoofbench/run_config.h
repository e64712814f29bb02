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

#ifndef SPOOFBENCH_RUN_CONFIG_H_
#define SPOOFBENCH_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spoofbench/antispoof.h"
#include "spoofbench/audio.h"
#include "spoofbench/data_proto.h"
#include "spoofbench/enhancer.h"
#include "spoofbench/frontend.h"
#include "spoofbench/spk_embed.h"

namespace spoofbench {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Profile { kToy, kReference };

Profile ParseProfile(std::string_view s);
std::string_view ToString(Profile p);

// Every hyperparameter of the pipeline, addressable as "section.key".
// Reference-profile defaults are the published settings; the toy profile
// shrinks sizes and raises learning rates so a full run fits in minutes.
struct RunConfig {
  Profile profile = Profile::kReference;
  std::string name = "default";
  uint64_t seed = 0;

  AlignPolicy align;
  CropMode train_crop = CropMode::kRandomCrop;
  SplitPlan split;
  FrontendConfig frontend;
  uint64_t frontend_init_seed = 20240901;
  AntispoofConfig antispoof;
  AamConfig aam;
  LrSchedule schedule;
  ExtractorTrainOptions spk;
  EnhancerConfig enhancer;
  int cdf_bins = 200;
  int score_batch = 16;
  bool in_memory = false;

  static RunConfig Defaults(Profile profile);

  // Assigns one "section.key" from its text form. ConfigError on unknown
  // keys or unparsable values.
  void Set(std::string_view key, std::string_view value);
  std::string Get(std::string_view key) const;
  static std::vector<std::string> Keys();

  // "section.key = value" lines; '#' starts a comment.
  void ApplyText(std::string_view text, const std::string& source = "<config>");
  void ApplyFile(const std::filesystem::path& path);
  std::string ToText() const;

  // Copies the global seed into every stage and validates each section.
  void Finalize();
};

// runs/<name>/{config,checkpoints,scores,enhanced,report}
struct RunDir {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path scores() const { return root / "scores"; }
  std::filesystem::path enhanced() const { return root / "enhanced"; }
  std::filesystem::path report() const { return root / "report"; }

  void Create() const;
};

// Writes config/config.txt and config/manifest_<stage>.json (snapshot,
// library versions, seed, argv).
void WriteRunManifest(const RunDir& dir, const RunConfig& config, const std::string& stage,
                      const std::vector<std::string>& argv);

nlohmann::json RunManifest(const RunConfig& config, const std::string& stage,
                           const std::vector<std::string>& argv);

nlohmann::json LibraryVersions();

}  // namespace spoofbench

#endif  // SPOOFBENCH_RUN_CONFIG_H_
