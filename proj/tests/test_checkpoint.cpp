/*
 Copyright 2026 The cfvi Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "cfvi/checkpoint.hpp"
#include "cfvi/errors.hpp"
#include "test_support.hpp"

namespace cfvi {
namespace {

namespace fs = std::filesystem;

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cfvi_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_.value_net.ensemble = 2;
    config_.value_net.hidden = {8, 6};
    config_.train.seed = 7;
  }
  void TearDown() override { fs::remove_all(dir_); }

  ValueEnsemble make_net() const {
    const TrainSetup s = build_setup(config_);
    return ValueEnsemble(s.problem.features(), s.problem.model().desired_state(),
                         config_.value_net, 99);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string read_bytes(const std::string& p) const {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  void write_bytes(const std::string& p, const std::string& bytes) const {
    std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
  }

  template <typename F>
  std::string checkpoint_error(F fn) {
    try {
      fn();
    } catch (const CheckpointError& e) {
      return e.what();
    }
    ADD_FAILURE() << "expected CheckpointError";
    return "";
  }

  fs::path dir_;
  ExperimentConfig config_;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  const ValueEnsemble net = make_net();
  save_checkpoint(path("a.ckpt"), config_, net, 12);
  EXPECT_FALSE(fs::exists(path("a.ckpt.tmp")));
  const Checkpoint ck = load_checkpoint(path("a.ckpt"));
  EXPECT_EQ(ck.iteration, 12);
  EXPECT_EQ(ck.config_hash, config_hash(config_));
  EXPECT_EQ(to_json(ck.config), to_json(config_));
  ASSERT_EQ(ck.ensemble.members(), net.members());
  for (int k = 0; k < net.members(); ++k) {
    EXPECT_EQ(ck.ensemble.nets()[k].params(), net.nets()[k].params());
  }
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vec x = testing::uniform_in(build_setup(config_).problem.model().domain(), rng);
    EXPECT_EQ(ck.ensemble.value(x), net.value(x));
  }
}

TEST_F(CheckpointTest, StartsWithMagicAndVersion) {
  save_checkpoint(path("a.ckpt"), config_, make_net(), 0);
  const std::string bytes = read_bytes(path("a.ckpt"));
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 8), "CFVICKPT");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), kCheckpointVersion);
  EXPECT_EQ(bytes[9], 0);
}

TEST_F(CheckpointTest, VersionMismatchIsExplicit) {
  save_checkpoint(path("a.ckpt"), config_, make_net(), 0);
  std::string bytes = read_bytes(path("a.ckpt"));
  bytes[8] = static_cast<char>(kCheckpointVersion + 1);
  write_bytes(path("b.ckpt"), bytes);
  const std::string msg = checkpoint_error([&] { load_checkpoint(path("b.ckpt")); });
  EXPECT_NE(msg.find("schema version " + std::to_string(kCheckpointVersion + 1)),
            std::string::npos)
      << msg;
}

TEST_F(CheckpointTest, RejectsBadFiles) {
  save_checkpoint(path("a.ckpt"), config_, make_net(), 0);
  const std::string bytes = read_bytes(path("a.ckpt"));

  write_bytes(path("magic.ckpt"), "NOTACKPT" + bytes.substr(8));
  EXPECT_NE(checkpoint_error([&] { load_checkpoint(path("magic.ckpt")); })
                .find("not a cfvi checkpoint"),
            std::string::npos);

  write_bytes(path("short.ckpt"), bytes.substr(0, bytes.size() - 8));
  EXPECT_NE(checkpoint_error([&] { load_checkpoint(path("short.ckpt")); }).find("truncated"),
            std::string::npos);

  write_bytes(path("long.ckpt"), bytes + "x");
  EXPECT_NE(checkpoint_error([&] { load_checkpoint(path("long.ckpt")); }).find("trailing"),
            std::string::npos);

  EXPECT_THROW(load_checkpoint(path("missing.ckpt")), CheckpointError);
}

TEST_F(CheckpointTest, EditedConfigFailsHashCheck) {
  save_checkpoint(path("a.ckpt"), config_, make_net(), 0);
  std::string bytes = read_bytes(path("a.ckpt"));
  const auto pos = bytes.find("\"rho\":1.0");
  ASSERT_NE(pos, std::string::npos);
  bytes.replace(pos, 9, "\"rho\":2.0");
  write_bytes(path("b.ckpt"), bytes);
  EXPECT_NE(checkpoint_error([&] { load_checkpoint(path("b.ckpt")); }).find("hash"),
            std::string::npos);
}

TEST_F(CheckpointTest, ArchitectureMismatchIsRejected) {
  ExperimentConfig other = config_;
  other.value_net.hidden = {8, 7};
  const TrainSetup s = build_setup(other);
  const ValueEnsemble wrong(s.problem.features(), s.problem.model().desired_state(),
                            other.value_net, 1);
  save_checkpoint(path("a.ckpt"), config_, wrong, 0);
  EXPECT_NE(checkpoint_error([&] { load_checkpoint(path("a.ckpt")); }).find("parameter count"),
            std::string::npos);
}

}  // namespace
}  // namespace cfvi
