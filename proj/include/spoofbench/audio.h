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

#ifndef SPOOFBENCH_AUDIO_H_
#define SPOOFBENCH_AUDIO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spoofbench/nn/tensor.h"

namespace spoofbench {

inline constexpr int kSampleRate = 16000;
inline constexpr int64_t kReferenceLength = 64600;

// Mono 16 kHz audio. Immutable after construction; never empty, always
// finite.
class Waveform {
 public:
  explicit Waveform(std::vector<double> samples, int sample_rate = kSampleRate);

  std::span<const double> samples() const { return samples_; }
  int64_t size() const { return static_cast<int64_t>(samples_.size()); }
  int sample_rate() const { return sample_rate_; }
  double operator[](int64_t i) const { return samples_[static_cast<size_t>(i)]; }

  bool operator==(const Waveform&) const = default;

 private:
  std::vector<double> samples_;
  int sample_rate_;
};

enum class CropMode { kRandomCrop, kFixedStart };

struct AlignPolicy {
  int64_t target_length = kReferenceLength;
  CropMode mode = CropMode::kFixedStart;
  uint64_t seed = 0;
};

// Short inputs are tiled end to end and then cropped; long inputs are cropped
// to a contiguous window. Output samples are always input samples.
Waveform AlignLength(const Waveform& wav, const AlignPolicy& policy);

// 16-bit PCM WAV, mono, 16 kHz. Samples are scaled by 1/32768.
Waveform ReadAudio(const std::filesystem::path& path);
// Clips to [-1, 1 - 2^-15] and rounds to the nearest 16-bit code.
void WriteAudio(const Waveform& wav, const std::filesystem::path& path);

// Equal-length waveforms stacked into a [N, L] tensor.
nn::Tensor StackWaveforms(std::span<const Waveform> wavs);
nn::Tensor StackWaveforms(std::span<const Waveform* const> wavs);

}  // namespace spoofbench

#endif  // SPOOFBENCH_AUDIO_H_
