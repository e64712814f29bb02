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

#ifndef SPOOFBENCH_PIPELINE_H_
#define SPOOFBENCH_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spoofbench/antispoof.h"
#include "spoofbench/audio.h"
#include "spoofbench/data_proto.h"
#include "spoofbench/enhancer.h"
#include "spoofbench/eval_metrics.h"
#include "spoofbench/spk_embed.h"

namespace spoofbench {

using AudioMap = std::map<std::string, Waveform>;
using AudioLoader = std::function<Waveform(const TrialRecord&)>;

AudioLoader MapLoader(const AudioMap& audio);
// Reads <dir>/<utt_id>.wav.
AudioLoader DirectoryLoader(std::filesystem::path dir);

// Alignment of one utterance: fixed_start for evaluation, or a random crop
// whose seed mixes `seed` with the utterance id (independent of list order).
Waveform AlignFor(const TrialRecord& record, const Waveform& wav, const AlignPolicy& base,
                  CropMode mode);

std::vector<LabeledUtterance> BuildAntispoofData(const std::vector<TrialRecord>& records,
                                                 const AudioLoader& load,
                                                 const AlignPolicy& policy, CropMode mode);

// Bona fide records only; speaker indices follow sorted speaker ids, which
// are returned through `speakers` when non-null.
std::vector<SpeakerUtterance> BuildSpeakerData(const std::vector<TrialRecord>& records,
                                               const AudioLoader& load,
                                               const AlignPolicy& policy, CropMode mode,
                                               std::vector<std::string>* speakers = nullptr);

// PairForEnhancement over the attacker set, materialized as aligned audio.
std::vector<SpoofPair> BuildEnhancerPairs(const std::vector<TrialRecord>& records,
                                          const AudioLoader& load, const AlignPolicy& policy,
                                          CropMode mode, uint64_t seed,
                                          std::vector<std::string>* warnings = nullptr);

// Bona fide logit per trial, aligned with fixed_start. When `enhancer` is
// given, spoofed trials are enhanced in memory before scoring.
std::vector<std::pair<std::string, double>> ScoreTrials(
    const std::vector<TrialRecord>& records, const AudioLoader& load, AntispoofModel& model,
    int64_t target_length, int batch, ConvTasNet* enhancer = nullptr);

// Joins utt_id scores with protocol keys. Scores for utterances missing from
// the protocol raise InvalidInputError; protocol rows without a score are
// skipped.
ScoreSet JoinScores(const std::vector<std::pair<std::string, double>>& scores,
                    const std::vector<TrialRecord>& records);

struct EnhanceManifestEntry {
  std::string utt_id;
  std::string relative_path;
  bool enhanced = false;
};

struct BatchEnhanceResult {
  std::vector<EnhanceManifestEntry> entries;
  std::vector<std::string> errors;
};

// One output file per trial under out_dir: spoofed trials are aligned
// (fixed_start), enhanced and written as 16-bit PCM; bona fide files are
// copied byte for byte. Per-file failures are collected and the batch goes
// on. Writes out_dir/manifest.tsv once at the end.
BatchEnhanceResult BatchEnhance(const std::vector<TrialRecord>& records,
                                const std::filesystem::path& audio_dir, ConvTasNet& model,
                                const std::filesystem::path& out_dir, int64_t target_length,
                                int batch = 8);

void WriteEnhanceManifest(const std::vector<EnhanceManifestEntry>& entries,
                          const std::filesystem::path& path);
std::vector<EnhanceManifestEntry> ReadEnhanceManifest(const std::filesystem::path& path);

// Loader resolving utt_ids through a manifest (paths relative to its folder).
AudioLoader ManifestLoader(const std::filesystem::path& manifest_path);

}  // namespace spoofbench

#endif  // SPOOFBENCH_PIPELINE_H_
