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

#ifndef SPOOFBENCH_SYNTH_H_
#define SPOOFBENCH_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spoofbench/audio.h"
#include "spoofbench/data_proto.h"

namespace spoofbench {

// Synthetic stand-in for an ASVspoof-style corpus. Each speaker has a fixed
// pitch range and formant envelope; bona fide utterances are harmonic
// "syllable" sequences with breath noise. Each spoofing system re-renders the
// speaker with a slightly shifted envelope, a flat pitch contour and a
// system-specific band of vocoder noise.
struct SynthConfig {
  int speakers = 8;
  int bonafide_per_speaker = 16;
  int spoofs_per_system = 2;  // per speaker
  std::vector<std::string> systems = {"A01", "A02", "A03", "A04", "A05", "A06"};
  int64_t length = 8000;
  double artifact_level = 1.0;  // noise RMS relative to the voiced RMS
  std::string utt_prefix = "T";
  uint64_t seed = 0;

  void Validate() const;
};

struct SynthCorpus {
  std::vector<TrialRecord> records;
  std::map<std::string, Waveform> audio;  // keyed by utt_id

  const Waveform& at(const std::string& utt_id) const;
};

SynthCorpus GenerateCorpus(const SynthConfig& config);

// Writes <dir>/protocol.txt and <dir>/wav/<utt_id>.wav.
void WriteCorpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

// Loads every protocol utterance from <audio_dir>/<utt_id>.wav.
std::map<std::string, Waveform> LoadAudio(const std::vector<TrialRecord>& records,
                                          const std::filesystem::path& audio_dir);

std::string SpeakerName(int index);

}  // namespace spoofbench

#endif  // SPOOFBENCH_SYNTH_H_
