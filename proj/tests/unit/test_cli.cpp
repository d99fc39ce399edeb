// Copyright 2026 The rankkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <string>

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rankkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("config.json", R"({
      "seed": 3,
      "world": {"member_vocab": 100, "item_vocab": 100},
      "data": {"rows_per_window": 2000, "test_rows": 200},
      "model": {"hidden": [8], "embedding": {"quotient_size": 20, "remainder_size": 10, "dim": 4}},
      "optimizer": {"epochs": 3, "batch_size": 64}
    })");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  // Exit status of the tool; stdout and stderr go to a log file.
  int run(const std::string& args, const std::string& config = "config.json") const {
    std::string cmd = std::string("\"") + RANKKIT_CLI_PATH + "\"";
    if (!config.empty()) cmd += " --config " + path(config);
    cmd += " " + args + " >>" + path("log.txt") + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::size_t line_count(const std::string& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) ++n;
    return n;
  }

  fs::path dir_;
};

TEST_F(Cli, UsageErrorsExitWithConfigCode) {
  EXPECT_EQ(run("", ""), 2);
  EXPECT_EQ(run("frobnicate", ""), 2);
  EXPECT_EQ(run("train --data x.jsonl", ""), 2);
  EXPECT_EQ(run("--help", ""), 0);
}

TEST_F(Cli, BadConfigsExitWithConfigCode) {
  write("unknown.json", R"({"optimiser": {}})");
  EXPECT_EQ(run("gen-data --out " + path("d"), "unknown.json"), 2);
  write("warmup.json", R"({"optimizer": {"warmup_fraction": 0.61}})");
  EXPECT_EQ(run("gen-data --out " + path("d"), "warmup.json"), 2);
  EXPECT_NE(read(path("log.txt")).find("0.6"), std::string::npos);
  write("multiply.json", R"({"model": {"embedding": {"aggregation": "multiply"}}})");
  EXPECT_EQ(run("gen-data --out " + path("d"), "multiply.json"), 2);
}

TEST_F(Cli, GenDataWritesWindowsDeterministically) {
  ASSERT_EQ(run("gen-data --out " + path("a") + " --windows 2"), 0);
  ASSERT_EQ(run("gen-data --out " + path("b") + " --windows 2"), 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(path("a"))) {
    ++files;
    EXPECT_EQ(line_count(entry.path().string()), 2000u);
    const std::string twin = (fs::path(path("b")) / entry.path().filename()).string();
    EXPECT_EQ(read(entry.path().string()), read(twin));
  }
  EXPECT_EQ(files, 2u);
  ASSERT_EQ(run("--seed 4 gen-data --out " + path("c") + " --windows 1"), 0);
  EXPECT_NE(read(path("a/window_00.jsonl")), read(path("c/window_00.jsonl")));
}

TEST_F(Cli, DataErrorsExitWithDataCode) {
  EXPECT_EQ(run("train --data " + path("missing.jsonl") + " --out-checkpoint " + path("m.lrk")), 3);
  write("broken.jsonl", "{\"dense\": [1,2\n");
  EXPECT_EQ(run("train --data " + path("broken.jsonl") + " --out-checkpoint " + path("m.lrk")), 3);
  EXPECT_NE(read(path("log.txt")).find("line 1"), std::string::npos);
}

TEST_F(Cli, DivergenceExitsWithItsOwnCodeAndStep) {
  write("explode.json", R"({
      "seed": 3,
      "world": {"member_vocab": 100, "item_vocab": 100},
      "data": {"rows_per_window": 400},
      "model": {"hidden": [8], "embedding": {"quotient_size": 20, "remainder_size": 10, "dim": 4}},
      "optimizer": {"epochs": 2, "batch_size": 64, "peak_learning_rate": 1e300,
                    "warmup_fraction": 0}
    })");
  ASSERT_EQ(run("gen-data --out " + path("data") + " --windows 1", "explode.json"), 0);
  EXPECT_EQ(run("train --data " + path("data/window_00.jsonl") + " --out-checkpoint " +
                    path("m.lrk"),
                "explode.json"),
            4);
  EXPECT_NE(read(path("log.txt")).find("divergence at step 1"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("m.lrk")));
}

TEST_F(Cli, TrainEvalQuantizeRoundTrip) {
  ASSERT_EQ(run("gen-data --out " + path("data") + " --windows 1"), 0);
  const std::string data = path("data/window_00.jsonl");
  ASSERT_EQ(run("train --data " + data + " --out-checkpoint " + path("a.lrk")), 0);
  ASSERT_EQ(run("train --data " + data + " --out-checkpoint " + path("b.lrk")), 0);
  EXPECT_EQ(read(path("a.lrk")), read(path("b.lrk")));
  EXPECT_EQ(read(path("a.lrk")).substr(0, 4), "LRK1");

  ASSERT_EQ(run("eval --checkpoint " + path("a.lrk") + " --data " + data + " --out " +
                path("report.json")),
            0);
  const auto report = nlohmann::json::parse(read(path("report.json")));
  ASSERT_TRUE(report["auc"].is_number());
  EXPECT_GT(report["auc"].get<double>(), 0.5);
  EXPECT_TRUE(fs::exists(path("report.csv")));

  ASSERT_EQ(run("quantize --checkpoint " + path("a.lrk") + " --out " + path("q.lrk")), 0);
  EXPECT_LT(fs::file_size(path("q.lrk")), fs::file_size(path("a.lrk")));
  EXPECT_EQ(run("quantize --checkpoint " + path("q.lrk") + " --out " + path("qq.lrk")), 3);

  // Incremental cycle and a topology mismatch.
  ASSERT_EQ(run("train --data " + data + " --from-checkpoint " + path("a.lrk") +
                " --out-checkpoint " + path("inc.lrk")),
            0);
  write("wide.json", R"({
      "seed": 3,
      "world": {"member_vocab": 100, "item_vocab": 100},
      "model": {"hidden": [9], "embedding": {"quotient_size": 20, "remainder_size": 10, "dim": 4}}
    })");
  EXPECT_EQ(run("train --data " + data + " --from-checkpoint " + path("a.lrk") +
                    " --out-checkpoint " + path("w.lrk"),
                "wide.json"),
            2);
}

TEST_F(Cli, BanditSimWritesCurves) {
  write("bandit.json", R"({"bandit": {"arm_means": [0.2, 0.8], "reward_noise": 0.3}})");
  ASSERT_EQ(run("bandit-sim --rounds 50 --seeds 2 --out " + path("curves.csv"), "bandit.json"), 0);
  const std::string csv = read(path("curves.csv"));
  EXPECT_EQ(csv.rfind("policy,seed,round,cumulative_regret\n", 0), 0u);
  EXPECT_NE(csv.find("thompson"), std::string::npos);
}

}  // namespace
