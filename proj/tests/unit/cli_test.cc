/*
 * Copyright 2026 The Concept Field Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::path(::testing::TempDir()) / ("cfield_cli_" + std::to_string(getpid()));
    fs::create_directories(dir_);
    // Rightward sequences on a 12 x 12 grid with small jitter in both axes.
    std::ofstream corpus(dir_ / "corpus.jsonl");
    int id = 0;
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) {
        const double x = 0.08 * i, y = 0.08 * j;
        const double sx = 0.03 + 0.002 * ((i + 2 * j) % 3);
        const double sy = 0.002 * ((7 * i + 3 * j) % 5);
        json seq = {{"id", "s" + std::to_string(id++)},
                    {"half", i < 6 ? "left" : "right"},
                    {"vectors", {{x, y}, {x + sx, y + sy}, {x + 2 * sx, y + 2 * sy}}}};
        corpus << seq.dump() << "\n";
      }
    }
    corpus.close();
    const Result r = Run("build --input " + Path("corpus.jsonl") + " --out " + Path("c.vsdb"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }

  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string Path(const std::string& name) { return (dir_ / name).string(); }

  static Result Run(const std::string& args) {
    const std::string err_path = Path("stderr.txt");
    const std::string cmd = std::string(CFIELD_CLI_PATH) + " " + args + " 2>" + err_path;
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    char buf[4096];
    size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = ReadAll(err_path);
    return r;
  }

  static json RunJson(const std::string& args) {
    const Result r = Run(args);
    EXPECT_EQ(r.exit_code, 0) << args << "\n" << r.err;
    if (r.exit_code != 0) return json();
    return json::parse(r.out);
  }

  static void Write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
  }

  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, BuildWritesShardAndIdMap) {
  const json ids = json::parse(ReadAll(Path("c.vsdb.ids.json")));
  EXPECT_EQ(ids.size(), 144u);
  EXPECT_EQ(ids["s5"], 5);
  const json j = RunJson("build --input " + Path("corpus.jsonl") + " --out " + Path("k.vsdb") +
                         " --shard-key half");
  ASSERT_EQ(j["shards"].size(), 2u);
  EXPECT_EQ(j["records"], 432);
  EXPECT_EQ(j["shards"][0]["key"], "left");
  EXPECT_TRUE(fs::exists(Path("k-0.vsdb")));
  EXPECT_TRUE(fs::exists(Path("k-1.vsdb")));
  const json q = RunJson("--shard " + Path("k-0.vsdb") + " --shard " + Path("k-1.vsdb") +
                         " query --vector '[0.9, 0.1]' --k 1");
  EXPECT_EQ(q["neighbors"][0]["shard"], 1);
}

TEST_F(CliTest, QueryReturnsExactNeighbors) {
  const json j = RunJson("--shard " + Path("c.vsdb") + " query --vector '[0, 0]' --k 3");
  ASSERT_EQ(j["neighbors"].size(), 3u);
  EXPECT_EQ(j["neighbors"][0]["index"], 0);
  EXPECT_EQ(j["neighbors"][0]["distance"], 0.0);
  EXPECT_EQ(j["neighbors"][0]["has_delta"], true);
  for (size_t i = 1; i < 3; ++i) {
    EXPECT_LE(j["neighbors"][i - 1]["distance"].get<double>(),
              j["neighbors"][i]["distance"].get<double>());
  }
  const Result bad = Run("--shard " + Path("c.vsdb") + " query --vector '[0, 0, 0]'");
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_EQ(json::parse(bad.err)["error"], "DimensionError");
}

TEST_F(CliTest, ScoreSweepAndEvaluate) {
  Write("pairs.jsonl",
        "{\"s1\": [0.44, 0.44], \"s2\": [0.472, 0.444], \"label\": \"neg\"}\n"
        "{\"s1\": [0.44, 0.44], \"s2\": [0.1, 0.9], \"label\": \"pos\"}\n"
        "{\"s1\": [7, 7], \"s2\": [7.1, 7], \"label\": \"pos\"}\n");
  const std::string out = Path("score_out");
  const json j = RunJson("--shard " + Path("c.vsdb") + " --out-dir " + out +
                         " --zeta-low 2 --zeta-high 6 score --pairs " + Path("pairs.jsonl"));
  EXPECT_EQ(j["pairs"], 3);
  EXPECT_GE(j["labels"]["Positive"].get<int>(), 1);
  EXPECT_GE(j["labels"]["Unsure"].get<int>(), 1);
  std::vector<json> outcomes;
  std::istringstream lines(ReadAll(out + "/outcomes.jsonl"));
  for (std::string line; std::getline(lines, line);) outcomes.push_back(json::parse(line));
  ASSERT_EQ(outcomes.size(), 3u);
  EXPECT_LT(outcomes[0]["zeta_test"].get<double>(), outcomes[1]["zeta_test"].get<double>());
  EXPECT_EQ(outcomes[1]["label"], "Positive");
  EXPECT_EQ(outcomes[2]["status"], "OutOfCorpus");
  EXPECT_EQ(outcomes[2]["label"], "Unsure");
  EXPECT_TRUE(fs::exists(out + "/metrics.json"));

  const json s = RunJson("--out-dir " + out + " sweep --scores " + out + "/outcomes.jsonl");
  EXPECT_EQ(s["cells"], 143);
  EXPECT_TRUE(fs::exists(out + "/sweep.csv"));
  const json custom = RunJson("sweep --scores " + out + "/outcomes.jsonl --low 1 --high 2");
  EXPECT_EQ(custom["cells"], 1);
  EXPECT_EQ(Run("sweep --scores " + out + "/outcomes.jsonl --low 1").exit_code, 2);

  const json e = RunJson("--shard " + Path("c.vsdb") + " --out-dir " + out +
                         " evaluate --pairs " + Path("pairs.jsonl"));
  for (const char* name : {"field", "vsdb-top1-l2", "vsdb-top1-cos", "vdb-pair-cos"}) {
    EXPECT_TRUE(e["methods"].contains(name)) << name;
    EXPECT_TRUE(fs::exists(out + "/" + name + ".jsonl")) << name;
  }
}

TEST_F(CliTest, CalibrateIsReproducible) {
  const std::string args = "--shard " + Path("c.vsdb") + " --seed 7 calibrate --n-anchors 40";
  const json a = RunJson(args);
  const json b = RunJson(args);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["anchors_total"], 40);
  EXPECT_EQ(Run("--shard " + Path("c.vsdb") + " calibrate --train-fraction 0").exit_code, 2);
}

TEST_F(CliTest, WalkAndGeometry) {
  const std::string out = Path("walk_out");
  const json w = RunJson("--shard " + Path("c.vsdb") + " --out-dir " + out +
                         " walk --start '[0.2, 0.2]' --steps 4");
  EXPECT_GE(w["points"].get<int>(), 1);
  EXPECT_EQ(w["final_point"].size(), 2u);
  EXPECT_TRUE(fs::exists(out + "/walk.csv"));
  const json g = RunJson("--shard " + Path("c.vsdb") + " geometry --clusters 3 --rank-by circulation-max");
  EXPECT_EQ(g["rank_by"], "circulation-max");
  EXPECT_FALSE(g["clusters"].empty());
}

TEST_F(CliTest, BallisticsWritesCurves) {
  const std::string out = Path("ballistics_out");
  const json j = RunJson("--out-dir " + out + " ballistics --n-trajectories 150 --corpus-csv");
  EXPECT_EQ(j["query_theta"], 33.0);
  EXPECT_GT(j["zeta_drag"].get<double>(), j["zeta_clean"].get<double>());
  for (const char* f : {"zeta_clean.csv", "zeta_drag.csv", "query_clean.csv", "query_drag.csv",
                        "corpus.csv"}) {
    EXPECT_TRUE(fs::exists(out + "/" + f)) << f;
  }
}

TEST_F(CliTest, MalformedInputReportsLine) {
  Write("bad.jsonl",
        "{\"id\": \"a\", \"vectors\": [[1, 2]]}\n"
        "{\"id\": \"b\", \"vectors\": [[3, 4]]}\n"
        "{\"id\": \"c\", \"vectors\": [[5, 6]\n");
  const Result r = Run("build --input " + Path("bad.jsonl") + " --out " + Path("bad.vsdb"));
  EXPECT_EQ(r.exit_code, 2);
  const json err = json::parse(r.err);
  EXPECT_EQ(err["error"], "ParseError");
  EXPECT_EQ(err["line"], 3);
  EXPECT_FALSE(fs::exists(Path("bad.vsdb")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Run("").exit_code, 2);
  EXPECT_EQ(Run("query --vector '[0]'").exit_code, 2);
  EXPECT_EQ(Run("--shard " + Path("c.vsdb") + " query --vector 'nope'").exit_code, 2);
  Write("good.ini", "top-n = 5\nseed = 3\n");
  EXPECT_EQ(Run("--config " + Path("good.ini") + " --shard " + Path("c.vsdb") +
                " query --vector '[0, 0]'")
                .exit_code,
            0);
  Write("bad.ini", "top-n = 5\nno-such-option = 1\n");
  const Result r = Run("--config " + Path("bad.ini") + " --shard " + Path("c.vsdb") +
                       " query --vector '[0, 0]'");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(json::parse(r.err)["error"], "ParameterError");
  EXPECT_EQ(Run("--shard " + Path("missing.vsdb") + " query --vector '[0, 0]'").exit_code, 1);
}

}  // namespace
