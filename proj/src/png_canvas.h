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

#ifndef SPOOFBENCH_SRC_PNG_CANVAS_H_
#define SPOOFBENCH_SRC_PNG_CANVAS_H_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace spoofbench::internal {

struct Rgb {
  uint8_t r, g, b;
};

// Minimal RGB raster for plots; written out with libpng.
class Canvas {
 public:
  Canvas(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  void Set(int x, int y, Rgb c);
  void Line(int x0, int y0, int x1, int y1, Rgb c);
  void Rect(int x0, int y0, int x1, int y1, Rgb c);
  void Save(const std::filesystem::path& path) const;

 private:
  int width_;
  int height_;
  std::vector<uint8_t> pixels_;
};

// Dark-to-bright ramp for spectrogram cells, t in [0, 1].
Rgb HeatColor(double t);

}  // namespace spoofbench::internal

#endif  // SPOOFBENCH_SRC_PNG_CANVAS_H_
