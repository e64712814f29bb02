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

#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "spoofbench/checkpoint.h"
#include "spoofbench/error.h"
#include "test_util.h"

namespace spoofbench {
namespace {

Checkpoint Sample() {
  std::mt19937_64 rng(1);
  Checkpoint c;
  c.header = {{"kind", "test"}, {"config", {{"a", 1}}}};
  c.tensors = {{"w", testing::RandomTensor({2, 3}, rng)}, {"b", nn::Tensor({1}, -0.0)}};
  return c;
}

TEST(CheckpointTest, LayoutStartsWithMagicAndVersion) {
  const std::string bytes = SerializeCheckpoint(Sample());
  ASSERT_GT(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 8), std::string("SPBCKPT\0", 8));
  uint32_t version;
  std::memcpy(&version, bytes.data() + 8, 4);
  EXPECT_EQ(version, kCheckpointFormatVersion);
}

TEST(CheckpointTest, RoundTripIsExact) {
  const Checkpoint c = Sample();
  const Checkpoint back = DeserializeCheckpoint(SerializeCheckpoint(c));
  EXPECT_EQ(back.header["kind"], "test");
  EXPECT_EQ(back.header["format_version"], kCheckpointFormatVersion);
  ASSERT_EQ(back.tensors.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.tensors[i].first, c.tensors[i].first);
    EXPECT_EQ(back.tensors[i].second.shape(), c.tensors[i].second.shape());
    EXPECT_EQ(std::memcmp(back.tensors[i].second.data(), c.tensors[i].second.data(),
                          sizeof(double) * static_cast<size_t>(c.tensors[i].second.numel())),
              0);
  }
  EXPECT_EQ(SerializeCheckpoint(back), SerializeCheckpoint(c));
}

TEST(CheckpointTest, RejectsDamagedFiles) {
  const std::string bytes = SerializeCheckpoint(Sample());
  EXPECT_THROW(DeserializeCheckpoint(bytes.substr(0, bytes.size() - 3)), ParseError);
  EXPECT_THROW(DeserializeCheckpoint(bytes + "x"), ParseError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(DeserializeCheckpoint(bad), ParseError);
  bad = bytes;
  bad[8] = 9;
  EXPECT_THROW(DeserializeCheckpoint(bad), ParseError);
  EXPECT_THROW(DeserializeCheckpoint(""), ParseError);
}

TEST(CheckpointTest, FileIo) {
  const auto dir = testing::ScratchDir("ckpt");
  SaveCheckpoint(Sample(), dir / "c.ckpt");
  EXPECT_EQ(SerializeCheckpoint(LoadCheckpoint(dir / "c.ckpt")), SerializeCheckpoint(Sample()));
  EXPECT_THROW(LoadCheckpoint(dir / "none.ckpt"), IoError);
  EXPECT_THROW(SaveCheckpoint(Sample(), dir / "no" / "such" / "dir.ckpt"), IoError);
}

}  // namespace
}  // namespace spoofbench
