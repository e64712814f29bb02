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

#ifndef SPOOFBENCH_TRAIN_REPORT_H_
#define SPOOFBENCH_TRAIN_REPORT_H_

#include <vector>

#include "json.hpp"

namespace spoofbench {

struct TrainReport {
  std::vector<double> epoch_loss;  // mean training loss per epoch
  std::vector<double> dev_loss;    // empty when no development set was given
  int best_epoch = -1;             // epoch whose weights were kept (dev-based)
  long iterations = 0;

  nlohmann::json ToJson() const {
    return {{"epoch_loss", epoch_loss},
            {"dev_loss", dev_loss},
            {"best_epoch", best_epoch},
            {"iterations", iterations}};
  }
};

}  // namespace spoofbench

#endif  // SPOOFBENCH_TRAIN_REPORT_H_
