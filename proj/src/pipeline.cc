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

#include "spoofbench/pipeline.h"

#include <algorithm>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <glog/logging.h>

#include "spoofbench/error.h"

namespace spoofbench {

namespace {

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

}  // namespace

AudioLoader MapLoader(const AudioMap& audio) {
  return [&audio](const TrialRecord& r) -> Waveform {
    auto it = audio.find(r.utt_id);
    if (it == audio.end()) throw InvalidInputError("no audio for utterance " + r.utt_id);
    return it->second;
  };
}

AudioLoader DirectoryLoader(std::filesystem::path dir) {
  return [dir = std::move(dir)](const TrialRecord& r) {
    return ReadAudio(dir / (r.utt_id + ".wav"));
  };
}

Waveform AlignFor(const TrialRecord& record, const Waveform& wav, const AlignPolicy& base,
                  CropMode mode) {
  AlignPolicy p = base;
  p.mode = mode;
  p.seed = base.seed ^ Fnv1a(record.utt_id);
  return AlignLength(wav, p);
}

std::vector<LabeledUtterance> BuildAntispoofData(const std::vector<TrialRecord>& records,
                                                 const AudioLoader& load,
                                                 const AlignPolicy& policy, CropMode mode) {
  std::vector<LabeledUtterance> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({AlignFor(r, load(r), policy, mode),
                   r.key == TrialKey::kBonafide ? kBonafideClass : kSpoofClass});
  }
  return out;
}

std::vector<SpeakerUtterance> BuildSpeakerData(const std::vector<TrialRecord>& records,
                                               const AudioLoader& load,
                                               const AlignPolicy& policy, CropMode mode,
                                               std::vector<std::string>* speakers) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (r.key == TrialKey::kBonafide) ids.insert(r.speaker_id);
  }
  const std::vector<std::string> sorted(ids.begin(), ids.end());
  std::vector<SpeakerUtterance> out;
  for (const auto& r : records) {
    if (r.key != TrialKey::kBonafide) continue;
    const auto idx = std::lower_bound(sorted.begin(), sorted.end(), r.speaker_id) - sorted.begin();
    out.push_back({AlignFor(r, load(r), policy, mode), static_cast<int64_t>(idx)});
  }
  if (speakers) *speakers = sorted;
  return out;
}

std::vector<SpoofPair> BuildEnhancerPairs(const std::vector<TrialRecord>& records,
                                          const AudioLoader& load, const AlignPolicy& policy,
                                          CropMode mode, uint64_t seed,
                                          std::vector<std::string>* warnings) {
  PairingResult pairing = PairForEnhancement(records, seed);
  if (warnings) *warnings = pairing.warnings;
  std::vector<SpoofPair> out;
  out.reserve(pairing.pairs.size());
  for (const auto& p : pairing.pairs) {
    out.push_back({AlignFor(p.spoof, load(p.spoof), policy, mode),
                   AlignFor(p.bonafide, load(p.bonafide), policy, mode), p.spoof.speaker_id});
  }
  return out;
}

std::vector<std::pair<std::string, double>> ScoreTrials(
    const std::vector<TrialRecord>& records, const AudioLoader& load, AntispoofModel& model,
    int64_t target_length, int batch, ConvTasNet* enhancer) {
  AlignPolicy policy;
  policy.target_length = target_length;
  std::vector<std::pair<std::string, double>> out;
  out.reserve(records.size());
  const size_t step = static_cast<size_t>(std::max(batch, 1));
  for (size_t s = 0; s < records.size(); s += step) {
    const size_t e = std::min(records.size(), s + step);
    std::vector<Waveform> wavs;
    for (size_t i = s; i < e; ++i) {
      Waveform w = AlignFor(records[i], load(records[i]), policy, CropMode::kFixedStart);
      if (enhancer && records[i].key == TrialKey::kSpoof) w = Enhance(w, *enhancer);
      wavs.push_back(std::move(w));
    }
    const auto scores = BonafideScores(wavs, model, batch);
    for (size_t i = s; i < e; ++i) out.emplace_back(records[i].utt_id, scores[i - s]);
  }
  return out;
}

ScoreSet JoinScores(const std::vector<std::pair<std::string, double>>& scores,
                    const std::vector<TrialRecord>& records) {
  std::map<std::string, TrialKey> keys;
  for (const auto& r : records) keys.emplace(r.utt_id, r.key);
  ScoreSet set;
  for (const auto& [utt, score] : scores) {
    auto it = keys.find(utt);
    if (it == keys.end()) throw InvalidInputError("scored utterance " + utt + " not in protocol");
    set.entries.push_back({utt, score, it->second});
  }
  return set;
}

BatchEnhanceResult BatchEnhance(const std::vector<TrialRecord>& records,
                                const std::filesystem::path& audio_dir, ConvTasNet& model,
                                const std::filesystem::path& out_dir, int64_t target_length,
                                int batch) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  AlignPolicy policy;
  policy.target_length = target_length;

  BatchEnhanceResult result;
  std::vector<size_t> pending;
  std::vector<Waveform> pending_wavs;
  auto flush = [&] {
    if (pending.empty()) return;
    std::vector<Waveform> enhanced;
    try {
      enhanced = EnhanceBatch(pending_wavs, model, batch);
    } catch (const Error& e) {
      for (size_t i : pending) result.errors.push_back(records[i].utt_id + ": " + e.what());
      pending.clear();
      pending_wavs.clear();
      return;
    }
    for (size_t k = 0; k < pending.size(); ++k) {
      const auto& r = records[pending[k]];
      const std::string rel = r.utt_id + ".wav";
      try {
        WriteAudio(enhanced[k], out_dir / rel);
        result.entries.push_back({r.utt_id, rel, true});
      } catch (const Error& e) {
        result.errors.push_back(r.utt_id + ": " + e.what());
      }
    }
    pending.clear();
    pending_wavs.clear();
  };

  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto src = audio_dir / (r.utt_id + ".wav");
    const std::string rel = r.utt_id + ".wav";
    try {
      if (r.key == TrialKey::kBonafide) {
        std::filesystem::copy_file(src, out_dir / rel,
                                    std::filesystem::copy_options::overwrite_existing);
        result.entries.push_back({r.utt_id, rel, false});
      } else {
        pending_wavs.push_back(AlignFor(r, ReadAudio(src), policy, CropMode::kFixedStart));
        pending.push_back(i);
        if (pending.size() >= static_cast<size_t>(batch)) flush();
      }
    } catch (const std::exception& e) {
      result.errors.push_back(r.utt_id + ": " + e.what());
      LOG(WARNING) << "enhance: " << result.errors.back();
    }
  }
  flush();
  // Manifest lines follow protocol order.
  std::map<std::string, size_t> order;
  for (size_t i = 0; i < records.size(); ++i) order.emplace(records[i].utt_id, i);
  std::sort(result.entries.begin(), result.entries.end(),
            [&](const auto& a, const auto& b) { return order[a.utt_id] < order[b.utt_id]; });
  WriteEnhanceManifest(result.entries, out_dir / "manifest.tsv");
  return result;
}

void WriteEnhanceManifest(const std::vector<EnhanceManifestEntry>& entries,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : entries) {
    out << e.utt_id << '\t' << e.relative_path << '\t'
        << (e.enhanced ? "enhanced" : "passthrough") << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<EnhanceManifestEntry> ReadEnhanceManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<EnhanceManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    EnhanceManifestEntry e;
    std::string kind;
    if (!std::getline(ls, e.utt_id, '\t') || !std::getline(ls, e.relative_path, '\t') ||
        !std::getline(ls, kind) || (kind != "enhanced" && kind != "passthrough")) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected utt_id<TAB>path<TAB>{enhanced|passthrough}");
    }
    e.enhanced = kind == "enhanced";
    out.push_back(std::move(e));
  }
  return out;
}

AudioLoader ManifestLoader(const std::filesystem::path& manifest_path) {
  auto paths = std::make_shared<std::map<std::string, std::filesystem::path>>();
  const auto base = manifest_path.parent_path();
  for (const auto& e : ReadEnhanceManifest(manifest_path)) {
    (*paths)[e.utt_id] = base / e.relative_path;
  }
  return [paths](const TrialRecord& r) {
    auto it = paths->find(r.utt_id);
    if (it == paths->end()) throw InvalidInputError("utterance " + r.utt_id + " not in manifest");
    return ReadAudio(it->second);
  };
}

}  // namespace spoofbench
