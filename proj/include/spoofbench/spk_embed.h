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

#ifndef SPOOFBENCH_SPK_EMBED_H_
#define SPOOFBENCH_SPK_EMBED_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "json.hpp"
#include "spoofbench/audio.h"
#include "spoofbench/frontend.h"
#include "spoofbench/nn/module.h"
#include "spoofbench/train_report.h"

namespace spoofbench {

// Utterance-level speaker embedding: the time average of frontend frames.
// Kept unnormalized; cosine and AAM computations normalize internally.
struct SpeakerEmbedding {
  std::vector<double> vector;
};

struct AamConfig {
  double margin = 0.3;  // additive angle, radians
  double scale = 15.0;
  int64_t num_speakers = 0;

  void Validate() const;
};

// Warmup / hold / linear decay learning-rate schedule over total_iters.
struct LrSchedule {
  double peak = 1e-5;
  double warmup_frac = 0.10;
  double constant_frac = 0.40;
  double decay_frac = 0.50;
  long total_iters = 100000;

  void Validate() const;
  // Piecewise linear in the (possibly fractional) iteration index.
  double LrAt(double iteration) const;
};

struct ExtractorTrainOptions {
  int batch = 32;
  uint64_t seed = 0;
};

// Frontend + average pooling over time. No extra embedding layer: the
// embedding dimension equals the frontend's.
class SpeakerExtractor : public nn::Module {
 public:
  explicit SpeakerExtractor(std::unique_ptr<Frontend> frontend);

  // waveforms [N, L] -> embeddings [N, D]
  nn::Var Embed(const nn::Var& waveforms);
  int64_t embed_dim() const { return frontend_->config().embed_dim; }

  void Freeze() { SetRequiresGrad(false); }
  bool frozen() const { return AllFrozen(); }
  Frontend& frontend() { return *frontend_; }
  const Frontend& frontend() const { return *frontend_; }

 private:
  std::unique_ptr<Frontend> frontend_;
};

SpeakerEmbedding ExtractEmbedding(const Waveform& wav, SpeakerExtractor& extractor);

// -log( e^{s cos(t_y + m)} / (e^{s cos(t_y + m)} + sum_{j != y} e^{s cos t_j}) )
// with t_j the angle between the embedding and class weight row j.
double AamSoftmaxLoss(const SpeakerEmbedding& embedding, int64_t speaker,
                      const nn::Tensor& weights, const AamConfig& config);
// Batched, differentiable form: embeddings [N, D], weights [K, D]; mean loss.
nn::Var AamSoftmaxLoss(const nn::Var& embeddings, std::span<const int64_t> speakers,
                       const nn::Var& weights, const AamConfig& config);

struct SpeakerUtterance {
  Waveform wav;
  int64_t speaker;  // dense index in [0, num_speakers)
};

// Trains frontend + an AAM class-weight matrix for schedule.total_iters Adam
// steps, cycling over reshuffled passes of the data. epoch_loss holds the
// mean loss of each full pass. The class weights are discarded afterwards.
TrainReport TrainExtractor(SpeakerExtractor& extractor,
                           std::span<const SpeakerUtterance> data,
                           const LrSchedule& schedule, const AamConfig& config,
                           const ExtractorTrainOptions& options);

struct VerificationTrial {
  const Waveform* enroll;
  const Waveform* test;
  bool same_speaker;
};

double CosineSimilarity(std::span<const double> a, std::span<const double> b);
// Cosine-scored speaker verification EER in [0, 1].
double VerifyEer(SpeakerExtractor& extractor, std::span<const VerificationTrial> trials);

void SaveExtractor(const SpeakerExtractor& extractor, const std::filesystem::path& path);
std::unique_ptr<SpeakerExtractor> LoadExtractor(const std::filesystem::path& path);

}  // namespace spoofbench

#endif  // SPOOFBENCH_SPK_EMBED_H_
