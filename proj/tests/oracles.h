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

#ifndef SPOOFBENCH_TESTS_ORACLES_H_
#define SPOOFBENCH_TESTS_ORACLES_H_

// Independent reference implementations used as test oracles. They favor
// direct enumeration over efficiency.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <vector>

namespace spoofbench::testing {

struct OracleEer {
  double eer;
  double threshold;
};

// Enumerates every candidate threshold (each distinct score, then one point
// past the maximum that rejects everything) and counts errors from scratch
// at each one. The crossing is located with exact integer comparisons of
// #fa * n_bona against #fr * n_spoof.
inline OracleEer BruteForceEer(const std::vector<double>& bona, const std::vector<double>& spoof) {
  std::set<double> uniq(bona.begin(), bona.end());
  uniq.insert(spoof.begin(), spoof.end());
  std::vector<double> t(uniq.begin(), uniq.end());
  const int64_t nb = static_cast<int64_t>(bona.size());
  const int64_t ns = static_cast<int64_t>(spoof.size());
  struct Point {
    double t, far, frr;
    int64_t sign_num;  // fa * nb - fr * ns
  };
  std::vector<Point> pts;
  for (double th : t) {
    int64_t fa = 0, fr = 0;
    for (double s : spoof) fa += s >= th;
    for (double b : bona) fr += b < th;
    pts.push_back({th, double(fa) / ns, double(fr) / nb, fa * nb - fr * ns});
  }
  pts.push_back({t.back(), 0.0, 1.0, -ns});

  int first_zero = -1, last_zero = -1;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (pts[i].sign_num == 0) {
      if (first_zero < 0) first_zero = i;
      last_zero = i;
    }
  }
  if (first_zero >= 0) {
    const double lo = first_zero > 0 ? pts[first_zero - 1].t : pts[first_zero].t;
    return {pts[first_zero].far, 0.5 * (lo + pts[last_zero].t)};
  }
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i].sign_num > 0 && pts[i + 1].sign_num < 0) {
      const double d0 = pts[i].far - pts[i].frr;
      const double d1 = pts[i + 1].far - pts[i + 1].frr;
      const double w = d0 / (d0 - d1);
      return {pts[i].far + w * (pts[i + 1].far - pts[i].far),
              pts[i].t + w * (pts[i + 1].t - pts[i].t)};
    }
  }
  return {std::nan(""), std::nan("")};
}

// Warmup/hold/decay schedule written as three explicit segments.
inline double ScheduleOracle(double it, double total, double peak, double warm, double hold) {
  const double a = warm * total, b = (warm + hold) * total;
  if (it <= 0.0) return 0.0;
  if (it < a) return peak * it / a;
  if (it <= b) return peak;
  if (it >= total) return 0.0;
  return peak * (total - it) / (total - b);
}

inline double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// -log softmax over s*cos(theta_j) with the target angle widened by m.
inline double AamOracle(const std::vector<double>& e, int y,
                        const std::vector<std::vector<double>>& w, double m, double s) {
  std::vector<double> logits;
  for (size_t j = 0; j < w.size(); ++j) {
    double c = Dot(e, w[j]) / std::sqrt(Dot(e, e) * Dot(w[j], w[j]));
    c = std::clamp(c, -1.0 + 1e-7, 1.0 - 1e-7);
    const double theta = std::acos(c);
    logits.push_back(s * std::cos(static_cast<int>(j) == y ? theta + m : theta));
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return -(logits[y] - mx - std::log(z));
}

}  // namespace spoofbench::testing

#endif  // SPOOFBENCH_TESTS_ORACLES_H_
