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

#include "spoofbench/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "spoofbench/error.h"

namespace spoofbench {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

struct Voice {
  double f0;
  std::vector<double> formants;
  std::vector<double> bandwidths;
  double tilt;  // dB per kHz
};

Voice SpeakerVoice(int speaker, uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + static_cast<uint64_t>(speaker) * 104729 + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Voice v;
  v.f0 = 95.0 + 20.0 * speaker + 10.0 * u(rng);
  v.formants = {450.0 + 300.0 * u(rng), 1100.0 + 600.0 * u(rng), 2300.0 + 700.0 * u(rng),
                3300.0 + 600.0 * u(rng)};
  v.bandwidths = {80.0 + 40.0 * u(rng), 100.0 + 50.0 * u(rng), 150.0 + 60.0 * u(rng),
                  200.0 + 80.0 * u(rng)};
  v.tilt = -2.0 - 2.0 * u(rng);
  return v;
}

double Envelope(const Voice& v, double freq, double formant_scale) {
  double a = 0.0;
  for (size_t i = 0; i < v.formants.size(); ++i) {
    const double f = v.formants[i] * formant_scale;
    const double x = (freq - f) / (v.bandwidths[i] * 0.5);
    a += 1.0 / (1.0 + x * x);
  }
  return (0.02 + a) * std::pow(10.0, v.tilt * freq / 1000.0 / 20.0);
}

double Rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Harmonic rendering of a sequence of 100 ms syllables; each syllable moves
// the formants a little and bends the pitch contour unless `flat_pitch`.
std::vector<double> Voiced(const Voice& v, int64_t length, double formant_shift,
                           bool flat_pitch, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int64_t syllable = kSampleRate / 10;
  std::vector<double> out(static_cast<size_t>(length), 0.0);
  double phase = 0.0;
  std::vector<double> harmonic_phase(64);
  for (auto& p : harmonic_phase) p = kTwoPi * 0.5 * (u(rng) + 1.0);
  for (int64_t start = 0; start < length; start += syllable) {
    const double scale = formant_shift * (1.0 + 0.08 * u(rng));
    const double f_start = v.f0 * (1.0 + (flat_pitch ? 0.0 : 0.1 * u(rng)));
    const double f_end = v.f0 * (1.0 + (flat_pitch ? 0.0 : 0.1 * u(rng)));
    const int64_t end = std::min(length, start + syllable);
    const int harmonics = static_cast<int>(std::min<double>(63.0, 7000.0 / f_start));
    std::vector<double> amp(static_cast<size_t>(harmonics) + 1);
    for (int h = 1; h <= harmonics; ++h) amp[h] = Envelope(v, h * f_start, scale);
    for (int64_t t = start; t < end; ++t) {
      const double frac = static_cast<double>(t - start) / static_cast<double>(syllable);
      const double f0 = f_start + (f_end - f_start) * frac;
      phase += kTwoPi * f0 / kSampleRate;
      const double gate = std::sin(std::numbers::pi * std::min(1.0, frac * 1.05));
      double s = 0.0;
      for (int h = 1; h <= harmonics; ++h) s += amp[h] * std::sin(h * phase + harmonic_phase[h]);
      out[t] = gate * s;
    }
  }
  return out;
}

// Second-order resonator applied to white noise: band noise around `center`.
std::vector<double> BandNoise(int64_t length, double center, double bandwidth,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const double r = std::exp(-std::numbers::pi * bandwidth / kSampleRate);
  const double c = 2.0 * r * std::cos(kTwoPi * center / kSampleRate);
  std::vector<double> out(static_cast<size_t>(length));
  double y1 = 0.0, y2 = 0.0;
  for (auto& y : out) {
    y = g(rng) + c * y1 - r * r * y2;
    y2 = y1;
    y1 = y;
  }
  return out;
}

std::vector<double> WhiteNoise(int64_t length, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(static_cast<size_t>(length));
  for (auto& y : out) y = g(rng);
  return out;
}

void Mix(std::vector<double>& dst, const std::vector<double>& src, double gain) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += gain * src[i];
}

Waveform Normalize(std::vector<double> x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    for (auto& v : x) v *= peak / m;
  }
  return Waveform(std::move(x), kSampleRate);
}

// System-specific vocoder signature, derived from the system's index.
struct SystemStyle {
  double formant_shift;
  double noise_center;
  double noise_bandwidth;
};

SystemStyle StyleFor(const std::string& system) {
  std::seed_seq seq(system.begin(), system.end());
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SystemStyle s;
  s.formant_shift = 1.0 + 0.16 * (u(rng) - 0.5);
  s.noise_center = 4200.0 + 2600.0 * u(rng);
  s.noise_bandwidth = 400.0 + 600.0 * u(rng);
  return s;
}

}  // namespace

void SynthConfig::Validate() const {
  if (speakers < 1 || speakers > 40) throw ConfigError("synth speakers must be in [1, 40]");
  if (bonafide_per_speaker < 1 || spoofs_per_system < 0) {
    throw ConfigError("synth utterance counts out of range");
  }
  if (length < 400) throw ConfigError("synth length must be at least 400 samples");
  if (artifact_level < 0.0) throw ConfigError("synth artifact level must be non-negative");
}

const Waveform& SynthCorpus::at(const std::string& utt_id) const {
  auto it = audio.find(utt_id);
  if (it == audio.end()) throw InvalidInputError("no audio for utterance " + utt_id);
  return it->second;
}

std::string SpeakerName(int index) { return fmt::format("SPK{:02d}", index); }

SynthCorpus GenerateCorpus(const SynthConfig& config) {
  config.Validate();
  SynthCorpus corpus;
  int counter = 0;
  auto next_id = [&] { return fmt::format("{}_{:06d}", config.utt_prefix, counter++); };
  for (int s = 0; s < config.speakers; ++s) {
    const Voice voice = SpeakerVoice(s, config.seed);
    const std::string spk = SpeakerName(s);
    std::mt19937_64 rng(config.seed ^ (0x9E3779B97F4A7C15ull * (s + 1)) ^
                        Fnv1a(config.utt_prefix));
    for (int i = 0; i < config.bonafide_per_speaker; ++i) {
      auto x = Voiced(voice, config.length, 1.0, false, rng);
      Mix(x, WhiteNoise(config.length, rng), 0.02 * Rms(x));
      TrialRecord r{spk, next_id(), "-", TrialKey::kBonafide};
      corpus.audio.emplace(r.utt_id, Normalize(std::move(x), 0.5));
      corpus.records.push_back(std::move(r));
    }
    for (size_t k = 0; k < config.systems.size(); ++k) {
      const SystemStyle style = StyleFor(config.systems[k]);
      for (int i = 0; i < config.spoofs_per_system; ++i) {
        auto x = Voiced(voice, config.length, style.formant_shift, true, rng);
        const auto noise = BandNoise(config.length, style.noise_center,
                                     style.noise_bandwidth, rng);
        Mix(x, noise, config.artifact_level * Rms(x) / std::max(Rms(noise), 1e-12));
        TrialRecord r{spk, next_id(), config.systems[k], TrialKey::kSpoof};
        corpus.audio.emplace(r.utt_id, Normalize(std::move(x), 0.5));
        corpus.records.push_back(std::move(r));
      }
    }
  }
  return corpus;
}

void WriteCorpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "wav", ec);
  if (ec) throw IoError("cannot create " + (dir / "wav").string() + ": " + ec.message());
  WriteProtocol(corpus.records, dir / "protocol.txt");
  for (const auto& r : corpus.records) {
    WriteAudio(corpus.at(r.utt_id), dir / "wav" / (r.utt_id + ".wav"));
  }
}

std::map<std::string, Waveform> LoadAudio(const std::vector<TrialRecord>& records,
                                          const std::filesystem::path& audio_dir) {
  std::map<std::string, Waveform> out;
  for (const auto& r : records) {
    out.emplace(r.utt_id, ReadAudio(audio_dir / (r.utt_id + ".wav")));
  }
  return out;
}

}  // namespace spoofbench
