/**
 * Copyright 2026 The Retina Screening Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <cstring>

#include <gtest/gtest.h>

#include "retina/train.hpp"
#include "test_util.hpp"
#include "train_fixture.hpp"

namespace retina::train {
namespace {

using testing::TempDir;
using testing::tiny_dataset;
using testing::tiny_spec;

ErrorKind decode_error(const std::string& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorKind::InvalidConfig;
}

TrainState trained_state(int epochs) {
  const auto data = tiny_dataset(12, 12, 21);
  const auto split = split_by_patient(data, 0.25, 1);
  TrainConfig cfg;
  cfg.batch_size = 6;
  cfg.epochs = epochs;
  return train(initial_state(tiny_spec(), 17), split.train, split.validation, cfg).state;
}

TEST(Checkpoint, RoundTripIsLossless) {
  TempDir dir;
  const TrainState state = trained_state(2);
  save_checkpoint(state, dir / "a.rdrc");
  const TrainState back = load_checkpoint(dir / "a.rdrc");
  EXPECT_EQ(back.spec, state.spec);
  EXPECT_EQ(back.params, state.params);
  EXPECT_EQ(back.adam, state.adam);
  EXPECT_EQ(back.epoch, state.epoch);
  EXPECT_EQ(back.rng.state(), state.rng.state());
  ASSERT_EQ(back.history.size(), state.history.size());
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(state));
  EXPECT_FALSE(std::filesystem::exists(dir / "a.rdrc.tmp"));

  const auto batch = tiny_dataset(2, 12, 3);
  std::vector<const Image*> images{&batch.image(0), &batch.image(1), &batch.image(2)};
  const auto x = nnet::to_batch<float>(images);
  EXPECT_EQ(nnet::infer(back.spec, back.params, x), nnet::infer(state.spec, state.params, x));
}

TEST(Checkpoint, HeaderLayout) {
  const std::string bytes = encode_checkpoint(initial_state(tiny_spec(), 1));
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 4), "RDRC");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  EXPECT_EQ(version, kCheckpointVersion);
  std::uint64_t checksum;
  std::memcpy(&checksum, bytes.data() + 8, 8);
  EXPECT_EQ(checksum, fnv1a64(std::string_view(bytes).substr(16)));
}

TEST(Checkpoint, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Checkpoint, TruncatedIsCorrupt) {
  const std::string bytes = encode_checkpoint(trained_state(1));
  for (const std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{15}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_EQ(decode_error(bytes.substr(0, keep)), ErrorKind::CorruptCheckpoint) << keep;
  }
}

TEST(Checkpoint, FlippedByteIsCorrupt) {
  std::string bytes = encode_checkpoint(trained_state(1));
  bytes[bytes.size() / 2] ^= 0x10;
  EXPECT_EQ(decode_error(bytes), ErrorKind::CorruptCheckpoint);
}

TEST(Checkpoint, OtherVersionIsRejected) {
  std::string bytes = encode_checkpoint(trained_state(1));
  bytes[4] = 2;
  EXPECT_EQ(decode_error(bytes), ErrorKind::VersionMismatch);
}

TEST(Checkpoint, BadMagicIsCorrupt) {
  std::string bytes = encode_checkpoint(initial_state(tiny_spec(), 1));
  bytes[0] = 'X';
  EXPECT_EQ(decode_error(bytes), ErrorKind::CorruptCheckpoint);
}

TEST(Checkpoint, MissingFileIsIoError) {
  TempDir dir;
  try {
    load_checkpoint(dir / "nope.rdrc");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

TEST(Checkpoint, SameSeedByteIdenticalEveryEpoch) {
  const auto data = tiny_dataset(12, 12, 22);
  const auto split = split_by_patient(data, 0.25, 1);
  TrainConfig cfg;
  cfg.batch_size = 6;
  cfg.epochs = 4;
  const auto run = [&] {
    std::vector<std::string> snaps;
    train(initial_state(tiny_spec(), 5), split.train, split.validation, cfg,
          [&](const EpochRecord&, const TrainState& s) {
            snaps.push_back(encode_checkpoint(s));
            return true;
          });
    return snaps;
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a, b);
}

TEST(Checkpoint, ResumeMatchesUnbrokenRun) {
  const auto data = tiny_dataset(12, 12, 23);
  const auto split = split_by_patient(data, 0.25, 1);
  TempDir straight, broken;
  TrainConfig cfg;
  cfg.batch_size = 6;
  cfg.seed = 9;

  cfg.epochs = 5;
  cfg.checkpoint_dir = straight.path();
  const auto full = train(initial_state(tiny_spec(), cfg.seed), split.train, split.validation, cfg);

  cfg.checkpoint_dir = broken.path();
  cfg.epochs = 3;
  train(initial_state(tiny_spec(), cfg.seed), split.train, split.validation, cfg);
  cfg.epochs = 5;
  const auto resumed = train(load_checkpoint(broken / "latest.rdrc"), split.train, split.validation, cfg);

  EXPECT_EQ(resumed.state.params, full.state.params);
  EXPECT_EQ(resumed.best_params, full.best_params);
  EXPECT_EQ(resumed.best_epoch, full.best_epoch);
  EXPECT_EQ(testing::read_bytes(broken / "latest.rdrc"), testing::read_bytes(straight / "latest.rdrc"));
  EXPECT_EQ(testing::read_bytes(broken / "best.rdrc"), testing::read_bytes(straight / "best.rdrc"));
  EXPECT_EQ(testing::read_bytes(broken / "history.csv"), testing::read_bytes(straight / "history.csv"));
}

TEST(Checkpoint, ResumeAtEverySplitPoint) {
  const auto data = tiny_dataset(8, 12, 24);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 4;
  const auto full = train(initial_state(tiny_spec(), 3), data, Dataset{}, cfg);
  for (int cut = 0; cut <= 4; ++cut) {
    TrainConfig first = cfg;
    first.epochs = cut;
    const auto part = train(initial_state(tiny_spec(), 3), data, Dataset{}, first);
    const auto resumed = train(decode_checkpoint(encode_checkpoint(part.state)), data, Dataset{}, cfg);
    EXPECT_EQ(encode_checkpoint(resumed.state), encode_checkpoint(full.state)) << cut;
  }
}

}  // namespace
}  // namespace retina::train
