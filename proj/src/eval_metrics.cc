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

#include "spoofbench/eval_metrics.h"

#include <fftw3.h>
#include <fmt/format.h>
#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "png_canvas.h"
#include "spoofbench/error.h"

namespace spoofbench {

std::vector<double> ScoreSet::Scores(TrialKey key) const {
  std::vector<double> out;
  for (const auto& e : entries) {
    if (e.key == key) out.push_back(e.score);
  }
  return out;
}

// ---------------------------------------------------------------------------
// EER

EerResult ComputeEer(std::span<const double> bonafide, std::span<const double> spoof) {
  if (bonafide.empty() || spoof.empty()) {
    throw InvalidInputError("EER needs at least one bona fide and one spoof score");
  }
  for (double v : bonafide) {
    if (!std::isfinite(v)) throw InvalidInputError("non-finite bona fide score");
  }
  for (double v : spoof) {
    if (!std::isfinite(v)) throw InvalidInputError("non-finite spoof score");
  }
  std::vector<double> b(bonafide.begin(), bonafide.end());
  std::vector<double> s(spoof.begin(), spoof.end());
  std::sort(b.begin(), b.end());
  std::sort(s.begin(), s.end());
  std::vector<double> u;
  u.reserve(b.size() + s.size());
  std::merge(b.begin(), b.end(), s.begin(), s.end(), std::back_inserter(u));
  u.erase(std::unique(u.begin(), u.end()), u.end());

  const auto nb = static_cast<int64_t>(b.size());
  const auto ns = static_cast<int64_t>(s.size());
  const size_t k = u.size();
  // Counts at operating point i (i == k is the point beyond the maximum).
  std::vector<int64_t> spoof_ge(k + 1), bona_lt(k + 1);
  std::vector<double> thr(k + 1);
  size_t bi = 0, si = 0;
  for (size_t i = 0; i < k; ++i) {
    while (bi < b.size() && b[bi] < u[i]) ++bi;
    while (si < s.size() && s[si] < u[i]) ++si;
    bona_lt[i] = static_cast<int64_t>(bi);
    spoof_ge[i] = ns - static_cast<int64_t>(si);
    thr[i] = u[i];
  }
  bona_lt[k] = nb;
  spoof_ge[k] = 0;
  thr[k] = u[k - 1];

  auto far = [&](size_t i) { return static_cast<double>(spoof_ge[i]) / static_cast<double>(ns); };
  auto frr = [&](size_t i) { return static_cast<double>(bona_lt[i]) / static_cast<double>(nb); };
  // sign(FAR - FRR) evaluated exactly on integers.
  auto sign = [&](size_t i) {
    const int64_t v = spoof_ge[i] * nb - bona_lt[i] * ns;
    return (v > 0) - (v < 0);
  };

  size_t i = 1;
  while (sign(i) > 0) ++i;  // terminates: sign(k) < 0
  if (sign(i) == 0) {
    size_t j = i;
    while (j + 1 <= k && sign(j + 1) == 0) ++j;
    return {far(i), 0.5 * (thr[i - 1] + thr[j])};
  }
  const double d0 = far(i - 1) - frr(i - 1);
  const double d1 = far(i) - frr(i);
  const double alpha = d0 / (d0 - d1);
  return {far(i - 1) + alpha * (far(i) - far(i - 1)),
          thr[i - 1] + alpha * (thr[i] - thr[i - 1])};
}

EerResult ComputeEer(const ScoreSet& scores) {
  return ComputeEer(scores.Scores(TrialKey::kBonafide), scores.Scores(TrialKey::kSpoof));
}

// ---------------------------------------------------------------------------
// Distributions

std::vector<double> MakeScoreGrid(std::span<const double> scores, int bins) {
  if (scores.empty()) throw InvalidInputError("score grid of an empty set");
  if (bins < 2) throw InvalidInputError("score grid needs at least 2 points");
  auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> grid(static_cast<size_t>(bins));
  for (int i = 0; i < bins; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins - 1);
  }
  grid.back() = hi;
  return grid;
}

std::vector<double> EmpiricalCdf(std::span<const double> scores,
                                 std::span<const double> grid) {
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cdf;
  cdf.reserve(grid.size());
  for (double g : grid) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), g) - sorted.begin();
    cdf.push_back(sorted.empty() ? 0.0
                                 : static_cast<double>(count) / static_cast<double>(sorted.size()));
  }
  return cdf;
}

CdfTable ScoreDistribution(const ScoreSet& scores, int bins) {
  std::vector<double> all;
  for (const auto& e : scores.entries) all.push_back(e.score);
  CdfTable table;
  table.grid = MakeScoreGrid(all, bins);
  const auto bona = scores.Scores(TrialKey::kBonafide);
  const auto spoof = scores.Scores(TrialKey::kSpoof);
  if (!bona.empty()) table.bonafide = EmpiricalCdf(bona, table.grid);
  if (!spoof.empty()) table.spoof = EmpiricalCdf(spoof, table.grid);
  return table;
}

double DominanceFraction(std::span<const double> right, std::span<const double> left) {
  SPOOFBENCH_CHECK(right.size() == left.size() && !right.empty(),
                   "CDFs must share a non-empty grid");
  size_t ok = 0;
  for (size_t i = 0; i < right.size(); ++i) ok += right[i] <= left[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(right.size());
}

// ---------------------------------------------------------------------------
// Spectrogram

namespace {
std::mutex g_fftw_plan_mutex;
}  // namespace

Spectrogram ComputeSpectrogram(const Waveform& wav, int frame, int hop) {
  if (frame <= 0 || hop <= 0) throw InvalidInputError("spectrogram frame/hop must be positive");
  if (wav.size() < frame) {
    throw InvalidInputError("waveform of " + std::to_string(wav.size()) +
                            " samples is shorter than one spectrogram frame");
  }
  Spectrogram spec;
  spec.frames = (wav.size() - frame) / hop + 1;
  spec.bins = frame / 2 + 1;
  spec.db.assign(static_cast<size_t>(spec.frames * spec.bins), 0.0);

  std::vector<double> window(static_cast<size_t>(frame));
  for (int n = 0; n < frame; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / frame);
  }
  double* in = fftw_alloc_real(static_cast<size_t>(frame));
  fftw_complex* out = fftw_alloc_complex(static_cast<size_t>(spec.bins));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    plan = fftw_plan_dft_r2c_1d(frame, in, out, FFTW_ESTIMATE);
  }
  double peak = 0.0;
  for (int64_t t = 0; t < spec.frames; ++t) {
    for (int n = 0; n < frame; ++n) in[n] = wav[t * hop + n] * window[n];
    fftw_execute(plan);
    for (int64_t f = 0; f < spec.bins; ++f) {
      const double mag = std::hypot(out[f][0], out[f][1]);
      spec.db[static_cast<size_t>(t * spec.bins + f)] = mag;
      peak = std::max(peak, mag);
    }
  }
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);

  for (double& v : spec.db) {
    if (peak <= 0.0 || v <= 0.0) {
      v = kSpectrogramFloorDb;
    } else {
      v = std::max(kSpectrogramFloorDb, 20.0 * std::log10(v / peak));
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Report

std::string FormatEerPercent(double eer) {
  return fmt::format("{:.2f}", std::round(eer * 100.0 * 100.0) / 100.0);
}

namespace {

constexpr const char* kMissingCell = "\xE2\x80\x94";  // em dash

std::string SafeName(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '_';
  return out;
}

void PlotCdfs(const CdfPanel& panel, const std::vector<double>& grid,
              const std::vector<std::vector<double>>& cdfs,
              const std::filesystem::path& path) {
  constexpr int kW = 640, kH = 400, kLeft = 50, kRight = 20, kTop = 20, kBottom = 40;
  static const internal::Rgb kColors[] = {
      {31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {255, 127, 14}, {148, 103, 189}};
  internal::Canvas canvas(kW, kH);
  const int x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;
  canvas.Line(x0, y0, x1, y0, {0, 0, 0});
  canvas.Line(x0, y0, x0, y1, {0, 0, 0});
  for (int q = 1; q <= 4; ++q) {  // gridlines at 25% steps
    const int y = y0 - (y0 - y1) * q / 4;
    for (int x = x0; x <= x1; x += 4) canvas.Set(x, y, {200, 200, 200});
  }
  const double lo = grid.front(), hi = grid.back();
  auto px = [&](double v) {
    return x0 + static_cast<int>(std::lround((v - lo) / (hi - lo) * (x1 - x0)));
  };
  auto py = [&](double c) { return y0 - static_cast<int>(std::lround(c * (y0 - y1))); };
  for (size_t s = 0; s < cdfs.size(); ++s) {
    const auto color = kColors[s % std::size(kColors)];
    for (size_t i = 1; i < grid.size(); ++i) {
      // step: horizontal then vertical
      canvas.Line(px(grid[i - 1]), py(cdfs[s][i - 1]), px(grid[i]), py(cdfs[s][i - 1]), color);
      canvas.Line(px(grid[i]), py(cdfs[s][i - 1]), px(grid[i]), py(cdfs[s][i]), color);
    }
    canvas.Rect(x1 - 60, y1 + 10 + 12 * static_cast<int>(s), x1 - 40,
                y1 + 14 + 12 * static_cast<int>(s), color);  // legend swatch, order as in CSV
  }
  canvas.Save(path);
  (void)panel;
}

void PlotSpectrogram(const Spectrogram& spec, const std::filesystem::path& path) {
  internal::Canvas canvas(static_cast<int>(spec.frames), static_cast<int>(spec.bins));
  for (int64_t t = 0; t < spec.frames; ++t) {
    for (int64_t f = 0; f < spec.bins; ++f) {
      const double v = (spec.at(t, f) - kSpectrogramFloorDb) / -kSpectrogramFloorDb;
      canvas.Set(static_cast<int>(t), static_cast<int>(spec.bins - 1 - f),
                 internal::HeatColor(v));
    }
  }
  canvas.Save(path);
}

}  // namespace

ReportSummary EmitReport(const ReportInput& input, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  ReportSummary summary;
  std::map<std::pair<std::string, std::string>, const RunCell*> by_key;
  for (const RunCell& cell : input.cells) by_key[{cell.model, cell.condition}] = &cell;

  nlohmann::json cells_json = nlohmann::json::array();
  for (const auto& model : input.models) {
    std::vector<std::string> row;
    for (const auto& cond : input.conditions) {
      auto it = by_key.find({model, cond});
      nlohmann::json cj = {{"model", model}, {"condition", cond}};
      if (it == by_key.end() || !it->second->scores.has_value()) {
        summary.warnings.push_back("missing run: " + model + " x " + cond);
        LOG(WARNING) << summary.warnings.back();
        row.emplace_back(kMissingCell);
        cj["eer_percent"] = nullptr;
        cj["status"] = it == by_key.end() ? "missing" : "partial";
      } else {
        try {
          const EerResult r = ComputeEer(*it->second->scores);
          row.push_back(FormatEerPercent(r.eer));
          cj["eer_percent"] = std::stod(row.back());
          cj["threshold"] = r.threshold;
          cj["status"] = "ok";
        } catch (const InvalidInputError& e) {
          summary.warnings.push_back("unscorable run " + model + " x " + cond + ": " + e.what());
          LOG(WARNING) << summary.warnings.back();
          row.emplace_back(kMissingCell);
          cj["eer_percent"] = nullptr;
          cj["status"] = "partial";
        }
      }
      cells_json.push_back(cj);
    }
    summary.table.push_back(std::move(row));
  }

  {
    const auto path = out_dir / "results.csv";
    std::ofstream csv(path);
    if (!csv) throw IoError("cannot write " + path.string());
    csv << "anti_spoofing";
    for (const auto& c : input.conditions) csv << ',' << c;
    csv << '\n';
    for (size_t i = 0; i < input.models.size(); ++i) {
      csv << input.models[i];
      for (const auto& v : summary.table[i]) csv << ',' << v;
      csv << '\n';
    }
    summary.files.push_back(path);
  }

  for (const CdfPanel& panel : input.cdf_panels) {
    std::vector<double> all;
    for (const auto& [label, scores] : panel.series) all.insert(all.end(), scores.begin(), scores.end());
    if (all.empty()) {
      summary.warnings.push_back("empty CDF panel " + panel.name);
      continue;
    }
    const auto grid = MakeScoreGrid(all, 200);
    std::vector<std::vector<double>> cdfs;
    for (const auto& [label, scores] : panel.series) cdfs.push_back(EmpiricalCdf(scores, grid));
    const auto csv_path = out_dir / ("cdf_" + SafeName(panel.name) + ".csv");
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    csv << "score";
    for (const auto& [label, scores] : panel.series) csv << ',' << label;
    csv << '\n';
    for (size_t i = 0; i < grid.size(); ++i) {
      csv << fmt::format("{:.6g}", grid[i]);
      for (const auto& c : cdfs) csv << ',' << fmt::format("{:.6g}", c[i]);
      csv << '\n';
    }
    const auto png_path = out_dir / ("cdf_" + SafeName(panel.name) + ".png");
    PlotCdfs(panel, grid, cdfs, png_path);
    summary.files.push_back(csv_path);
    summary.files.push_back(png_path);
  }

  nlohmann::json spectro_json = nlohmann::json::array();
  for (const SpectrogramPanel& panel : input.spectrogram_panels) {
    const auto before = out_dir / ("spectrogram_" + SafeName(panel.name) + "_before.png");
    const auto after = out_dir / ("spectrogram_" + SafeName(panel.name) + "_after.png");
    PlotSpectrogram(ComputeSpectrogram(panel.before), before);
    PlotSpectrogram(ComputeSpectrogram(panel.after), after);
    summary.files.push_back(before);
    summary.files.push_back(after);
    nlohmann::json pj = {{"name", panel.name}};
    if (panel.score_before) pj["score_before"] = *panel.score_before;
    if (panel.score_after) pj["score_after"] = *panel.score_after;
    spectro_json.push_back(pj);
  }

  const auto json_path = out_dir / "results.json";
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write " + json_path.string());
  nlohmann::json doc = {{"models", input.models},
                        {"conditions", input.conditions},
                        {"cells", cells_json},
                        {"spectrograms", spectro_json},
                        {"warnings", summary.warnings},
                        {"metadata", input.metadata},
                        {"reference_full_scale_eer_percent", ReferenceFullScaleEers()}};
  js << doc.dump(2) << '\n';
  summary.files.push_back(json_path);
  return summary;
}

nlohmann::json ReferenceFullScaleEers() {
  // rows: anti-spoofing frontend; columns: enhancement None / wav2vec 2.0 / HuBERT
  const std::vector<std::string> rows = {"RawNet2", "wav2vec 2.0", "HuBERT", "WavLM", "WavLM+"};
  const std::vector<std::string> cols = {"None", "wav2vec 2.0", "HuBERT"};
  auto table = [&](std::vector<std::vector<double>> v) {
    nlohmann::json t = nlohmann::json::object();
    for (size_t i = 0; i < rows.size(); ++i) {
      for (size_t j = 0; j < cols.size(); ++j) t[rows[i]][cols[j]] = v[i][j];
    }
    return t;
  };
  nlohmann::json whole = {
      {"2019LA", table({{17.49, 60.60, 57.03}, {0.81, 0.60, 0.71}, {1.62, 2.86, 2.83},
                        {1.03, 2.68, 2.53}, {0.44, 0.24, 0.23}})},
      {"2021LA", table({{18.06, 67.68, 63.70}, {7.20, 16.57, 16.47}, {4.89, 25.94, 23.95},
                        {7.99, 33.95, 32.59}, {7.55, 26.94, 25.66}})},
      {"2021DF", table({{24.01, 68.46, 65.77}, {10.31, 25.49, 26.36}, {18.93, 46.22, 45.49},
                        {16.14, 46.71, 45.97}, {11.08, 33.63, 32.24}})}};
  nlohmann::json portion = {
      {"2019LA", table({{10.93, 24.28, 24.62}, {0.82, 0.60, 0.67}, {1.70, 2.12, 2.09},
                        {0.94, 3.05, 2.95}, {0.73, 0.30, 0.28}})},
      {"2021LA", table({{11.64, 29.31, 29.45}, {8.28, 20.05, 19.51}, {5.40, 15.25, 13.90},
                        {21.20, 38.06, 38.00}, {10.76, 29.20, 28.10}})},
      {"2021DF", table({{24.47, 49.76, 48.24}, {10.03, 21.16, 22.17}, {15.07, 38.40, 38.16},
                        {14.78, 42.30, 42.48}, {10.56, 31.95, 30.49}})}};
  nlohmann::json speaker = {{"wav2vec 2.0", {{"VoxCeleb1", 2.49}, {"VoxCeleb1-E", 2.91}, {"VoxCeleb1-H", 6.05}}},
                            {"HuBERT", {{"VoxCeleb1", 2.85}, {"VoxCeleb1-E", 3.15}, {"VoxCeleb1-H", 6.49}}}};
  return {{"shared_defender_full", whole},
          {"disjoint", portion},
          {"speaker_verification", speaker}};
}

void WriteScores(const std::vector<std::pair<std::string, double>>& scores,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [utt, score] : scores) out << utt << '\t' << fmt::format("{:.17g}", score) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::pair<std::string, double>> ReadScores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string utt, value, extra;
    if (!(ss >> utt >> value) || (ss >> extra)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'utt_id<TAB>score'");
    }
    double v;
    try {
      size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad score '" + value + "'");
    }
    out.emplace_back(utt, v);
  }
  return out;
}

}  // namespace spoofbench
