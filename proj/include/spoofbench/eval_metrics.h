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

#ifndef SPOOFBENCH_EVAL_METRICS_H_
#define SPOOFBENCH_EVAL_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spoofbench/audio.h"
#include "spoofbench/trial_key.h"

namespace spoofbench {

struct ScoreEntry {
  std::string utt_id;
  double score;
  TrialKey key;
};

struct ScoreSet {
  std::vector<ScoreEntry> entries;

  std::vector<double> Scores(TrialKey key) const;
};

struct EerResult {
  double eer;        // in [0, 1]
  double threshold;  // interpolated crossing point
};

// Equal error rate with the interpolated-crossing convention.
//
// Operating points sit at every distinct score u_0 < ... < u_{k-1}, where
// FAR(t) = #{spoof >= t} / #spoof and FRR(t) = #{bonafide < t} / #bonafide,
// plus a final point beyond the largest score (FAR 0, FRR 1, placed at
// u_{k-1}). FAR - FRR is non-increasing along the sweep. If it hits zero
// exactly, EER is that common rate and the threshold is the midpoint of the
// zero plateau, (u_{a-1} + u_b) / 2 for first/last zero points a, b.
// Otherwise both rates and the threshold are linearly interpolated between
// the last positive and the first negative point.
EerResult ComputeEer(std::span<const double> bonafide, std::span<const double> spoof);
EerResult ComputeEer(const ScoreSet& scores);

// Shared score grid of `bins` points spanning the observed range (widened by
// +-0.5 when all scores are equal).
std::vector<double> MakeScoreGrid(std::span<const double> scores, int bins);
// Fraction of scores <= each grid point.
std::vector<double> EmpiricalCdf(std::span<const double> scores,
                                 std::span<const double> grid);

struct CdfTable {
  std::vector<double> grid;
  std::vector<double> bonafide;  // empty if the class is absent
  std::vector<double> spoof;
};

CdfTable ScoreDistribution(const ScoreSet& scores, int bins = 200);

// Fraction of grid points where `right` lies at or below `left`, i.e. where
// the distribution behind `right` is shifted to higher scores.
double DominanceFraction(std::span<const double> right, std::span<const double> left);

struct Spectrogram {
  int64_t frames = 0;
  int64_t bins = 0;
  std::vector<double> db;  // frames x bins, row-major, in [-80, 0]

  double at(int64_t frame, int64_t bin) const {
    return db[static_cast<size_t>(frame * bins + bin)];
  }
};

inline constexpr double kSpectrogramFloorDb = -80.0;

// Periodic-Hann short-time magnitude spectra in dB relative to the global
// maximum, floored at -80 dB.
Spectrogram ComputeSpectrogram(const Waveform& wav, int frame = 512, int hop = 256);

struct RunCell {
  std::string model;
  std::string condition;
  std::optional<ScoreSet> scores;  // nullopt for a run that did not complete
};

struct CdfPanel {
  std::string name;
  std::vector<std::pair<std::string, std::vector<double>>> series;
};

struct SpectrogramPanel {
  std::string name;
  Waveform before;
  Waveform after;
  std::optional<double> score_before;
  std::optional<double> score_after;
};

struct ReportInput {
  std::vector<std::string> models;
  std::vector<std::string> conditions;
  std::vector<RunCell> cells;
  std::vector<CdfPanel> cdf_panels;
  std::vector<SpectrogramPanel> spectrogram_panels;
  nlohmann::json metadata = nlohmann::json::object();
};

struct ReportSummary {
  // table[i][j]: EER% for models[i] x conditions[j], "%.2f", or "—" when
  // missing.
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
};

// EER cell text: eer * 100 rounded to two decimals.
std::string FormatEerPercent(double eer);

// Writes results.csv, results.json, cdf_<name>.{csv,png} and
// spectrogram_<name>_{before,after}.png under out_dir.
ReportSummary EmitReport(const ReportInput& input, const std::filesystem::path& out_dir);

// Full-scale EERs (%) published for the attacker/defender matrix, kept as
// documentation targets next to desk-scale results.
nlohmann::json ReferenceFullScaleEers();

// Score files: "utt_id<TAB>score" per line.
void WriteScores(const std::vector<std::pair<std::string, double>>& scores,
                 const std::filesystem::path& path);
std::vector<std::pair<std::string, double>> ReadScores(const std::filesystem::path& path);

}  // namespace spoofbench

#endif  // SPOOFBENCH_EVAL_METRICS_H_
