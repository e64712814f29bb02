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

#include "spoofbench/audio.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "spoofbench/error.h"

namespace spoofbench {

Waveform::Waveform(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.empty()) throw InvalidInputError("empty waveform");
  if (sample_rate_ != kSampleRate) {
    throw UnsupportedFormatError("sample rate " + std::to_string(sample_rate_) +
                                 " (expected 16000)");
  }
  for (double v : samples_) {
    if (!std::isfinite(v)) throw InvalidInputError("non-finite sample in waveform");
  }
}

Waveform AlignLength(const Waveform& wav, const AlignPolicy& policy) {
  const int64_t target = policy.target_length;
  if (target <= 0) throw ConfigError("align target length must be positive");
  const int64_t len = wav.size();
  if (len == target) return wav;

  // Tile the full utterance until it covers the target, then crop.
  const int64_t repeats = len >= target ? 1 : (target + len - 1) / len;
  const int64_t avail = len * repeats;
  int64_t start = 0;
  if (policy.mode == CropMode::kRandomCrop && avail > target) {
    std::mt19937_64 rng(policy.seed);
    std::uniform_int_distribution<int64_t> dist(0, avail - target);
    start = dist(rng);
  }
  std::vector<double> out(static_cast<size_t>(target));
  for (int64_t i = 0; i < target; ++i) out[i] = wav[(start + i) % len];
  return Waveform(std::move(out), wav.sample_rate());
}

namespace {

uint32_t Le32(const char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}
uint16_t Le16(const char* p) {
  uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform ReadAudio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  const std::string where = " (" + path.string() + ")";
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0) {
    throw UnsupportedFormatError("not a RIFF/WAVE file" + where);
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const char* data = nullptr;
  size_t data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const size_t len = Le32(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    const size_t avail = std::min(len, bytes.size() - body);
    if (id == "fmt ") {
      if (avail < 16) throw UnsupportedFormatError("short fmt chunk" + where);
      format = Le16(bytes.data() + body);
      channels = Le16(bytes.data() + body + 2);
      rate = Le32(bytes.data() + body + 4);
      bits = Le16(bytes.data() + body + 14);
      if (format == kFormatExtensible && avail >= 26) {
        format = Le16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || data == nullptr) {
    throw UnsupportedFormatError("missing fmt or data chunk" + where);
  }
  if (format != kFormatPcm || bits != 16) {
    throw UnsupportedFormatError("only 16-bit PCM is supported" + where);
  }
  if (channels != 1) {
    throw UnsupportedFormatError(std::to_string(channels) +
                                 " channels, expected mono" + where);
  }
  if (rate != static_cast<uint32_t>(kSampleRate)) {
    throw UnsupportedFormatError("sample rate " + std::to_string(rate) +
                                 ", expected 16000" + where);
  }
  const size_t count = data_len / 2;
  if (count == 0) throw InvalidInputError("audio file has no samples" + where);
  std::vector<double> samples(count);
  for (size_t i = 0; i < count; ++i) {
    int16_t s;
    std::memcpy(&s, data + 2 * i, 2);
    samples[i] = static_cast<double>(s) / 32768.0;
  }
  return Waveform(std::move(samples), kSampleRate);
}

void WriteAudio(const Waveform& wav, const std::filesystem::path& path) {
  constexpr double kMax = 1.0 - 1.0 / 32768.0;
  const uint32_t data_len = static_cast<uint32_t>(wav.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  auto put32 = [&out](uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); };
  auto put16 = [&out](uint16_t v) { out.append(reinterpret_cast<char*>(&v), 2); };
  out += "RIFF";
  put32(36 + data_len);
  out += "WAVEfmt ";
  put32(16);
  put16(kFormatPcm);
  put16(1);
  put32(kSampleRate);
  put32(kSampleRate * 2);
  put16(2);
  put16(16);
  out += "data";
  put32(data_len);
  for (double v : wav.samples()) {
    const double c = std::clamp(v, -1.0, kMax);
    const auto s = static_cast<int16_t>(std::lround(c * 32768.0));
    out.append(reinterpret_cast<const char*>(&s), 2);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

nn::Tensor StackWaveforms(std::span<const Waveform* const> wavs) {
  if (wavs.empty()) throw InvalidInputError("no waveforms to stack");
  const int64_t len = wavs.front()->size();
  nn::Tensor out({static_cast<int64_t>(wavs.size()), len});
  for (size_t i = 0; i < wavs.size(); ++i) {
    if (wavs[i]->size() != len) {
      throw InvalidInputError("cannot batch waveforms of different lengths (" +
                              std::to_string(len) + " vs " +
                              std::to_string(wavs[i]->size()) + ")");
    }
    std::copy(wavs[i]->samples().begin(), wavs[i]->samples().end(),
              out.data() + static_cast<int64_t>(i) * len);
  }
  return out;
}

nn::Tensor StackWaveforms(std::span<const Waveform> wavs) {
  std::vector<const Waveform*> ptrs;
  ptrs.reserve(wavs.size());
  for (const Waveform& w : wavs) ptrs.push_back(&w);
  return StackWaveforms(std::span<const Waveform* const>(ptrs));
}

}  // namespace spoofbench
