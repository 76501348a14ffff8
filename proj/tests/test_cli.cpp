/* Copyright 2026 The vislayer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "vislayer/annotation.hpp"
#include "vislayer/file_util.hpp"
#include "vislayer/image_io.hpp"
#include "vislayer/model_io.hpp"

namespace vislayer {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int status = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(VISLAYER_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

double field(const std::string& text, const std::string& key) {
  const std::regex re(key + ": ([-+0-9.eE]+)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return NAN;
  return std::stod(m[1]);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("vislayer_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(Cli, GenModelWritesLoadableModel) {
  const RunResult r = run("gen-model --out " + path("m.json"));
  ASSERT_EQ(r.status, 0) << r.output;
  const ShapeModel m = load_model(path("m.json"));
  EXPECT_GE(m.num_vertices(), 500);
  EXPECT_EQ(m.num_identity(), 8);
  EXPECT_EQ(m.num_expression(), 4);
  EXPECT_NO_THROW(validate(m.data()));
}

TEST_F(Cli, GenModelSameSeedSameBytes) {
  ASSERT_EQ(run("gen-model --seed 5 --vertices 80 --out " + path("a.json")).status, 0);
  ASSERT_EQ(run("gen-model --seed 5 --vertices 80 --out " + path("b.json")).status, 0);
  ASSERT_EQ(run("gen-model --seed 6 --vertices 80 --out " + path("c.json")).status, 0);
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
  EXPECT_NE(read_file(path("a.json")), read_file(path("c.json")));
}

TEST_F(Cli, InvalidVertexCountIsUsageError) {
  const RunResult r = run("gen-model --vertices 10 --out " + path("m.json"));
  EXPECT_EQ(r.status, 2) << r.output;
  EXPECT_FALSE(fs::exists(path("m.json")));
}

TEST_F(Cli, UnknownSubcommandAndMissingFilesFail) {
  EXPECT_NE(run("frobnicate").status, 0);
  EXPECT_NE(run("render --model " + path("missing.json") + " --out " + path("x.pgm")).status, 0);
}

TEST_F(Cli, RenderDefaultFrontalIsSymmetric) {
  ASSERT_EQ(run("gen-model --out " + path("m.json")).status, 0);
  const RunResult r = run("render --model " + path("m.json") + " --size 64 --out " + path("v.pgm"));
  ASSERT_EQ(r.status, 0) << r.output;
  const Gray8 g = read_image(path("v.pgm"));
  ASSERT_EQ(g.width, 64);
  ASSERT_EQ(g.height, 64);
  ASSERT_TRUE(fs::exists(sidecar_path(path("v.pgm"))));
  // Pixel centres (u, v) and (63 - u, v) mirror about the frontal axis.
  int bad = 0;
  for (int v = 0; v < 64; ++v) {
    for (int u = 0; u < 32; ++u) {
      const int a = g.pixels[v * 64 + u];
      const int b = g.pixels[v * 64 + 63 - u];
      if (std::abs(a - b) > 0.02 * 255) ++bad;
    }
  }
  EXPECT_EQ(bad, 0);
}

TEST_F(Cli, MaskNoneDiffersFromMaskOne) {
  ASSERT_EQ(run("gen-model --out " + path("m.json")).status, 0);
  ASSERT_EQ(run("render --model " + path("m.json") + " --mask 1 --out " + path("a.png")).status, 0);
  ASSERT_EQ(run("render --model " + path("m.json") + " --mask none --out " + path("b.png")).status, 0);
  ASSERT_EQ(run("render --model " + path("m.json") + " --mask 2 --out " + path("c.png")).status, 0);
  EXPECT_NE(read_file(path("a.png")), read_file(path("b.png")));
  EXPECT_NE(read_file(path("a.png")), read_file(path("c.png")));
  EXPECT_EQ(run("render --model " + path("m.json") + " --mask 3 --out " + path("d.png")).status, 2);
}

TEST_F(Cli, RenderHonoursSize) {
  ASSERT_EQ(run("gen-model --vertices 100 --out " + path("m.json")).status, 0);
  ASSERT_EQ(run("render --model " + path("m.json") + " --size 40 --out " + path("v.pgm")).status, 0);
  const Gray8 g = read_image(path("v.pgm"));
  EXPECT_EQ(g.width, 40);
  EXPECT_EQ(g.height, 40);
}

TEST_F(Cli, RenderFromAnnotation) {
  ASSERT_EQ(run("gen-model --vertices 100 --out " + path("m.json")).status, 0);
  ASSERT_EQ(run("gen-data --model " + path("m.json") + " --count 2 --size 32 --out-dir " + path("d")).status, 0);
  const RunResult r = run("render --model " + path("m.json") + " --annotation " + path("d/face_0000.json") +
                          " --size 32 --mask none --out " + path("v.pgm"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(read_file(path("v.pgm")), read_file(path("d/face_0000.pgm")));
}

TEST_F(Cli, GradcheckPassesAndReportsWorstIndex) {
  const RunResult r = run("gradcheck --trials 4");
  ASSERT_EQ(r.status, 0) << r.output;
  for (const char* name : {"rasterizer", "projection_jacobian", "landmark_loss", "end_to_end"}) {
    EXPECT_NE(r.output.find(name), std::string::npos) << name;
  }
  EXPECT_NE(r.output.find("worst="), std::string::npos);
  EXPECT_NE(r.output.find("trials=4"), std::string::npos) << r.output;
  EXPECT_EQ(r.output.find("FAIL"), std::string::npos);
}

TEST_F(Cli, FitReproducesFixtures) {
  ASSERT_EQ(run("gen-model --out " + path("m.json")).status, 0);
  ASSERT_EQ(run("gen-data --model " + path("m.json") + " --count 10 --seed 4 --out-dir " + path("d")).status, 0);
  const RunResult r = run("fit --model " + path("m.json") + " --input " + path("d") + " --out-dir " +
                          path("fit") + " --csv " + path("fit.csv"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(field(r.output, "faces"), 10);
  EXPECT_LT(field(r.output, "mean_nme"), 1.0) << r.output;
  const Annotation a = load_annotation(path("fit/face_0003.json"));
  EXPECT_TRUE(a.params.has_value());
  const std::string csv = read_file(path("fit.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST_F(Cli, TrainOneEpochWritesCheckpoint) {
  const RunResult r = run("train --size 16 --train-count 12 --val-count 4 --epochs 1 --batch 4 --out " +
                          path("ck.json") + " --metrics " + path("m.csv") + " --dump-dir " + path("dump"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(path("ck.json")));
  EXPECT_TRUE(fs::exists(path("m.csv")));
  EXPECT_TRUE(fs::exists(path("dump/block_1.pgm")));
  const RunResult e = run("eval --size 16 --val-count 4 --checkpoint " + path("ck.json"));
  ASSERT_EQ(e.status, 0) << e.output;
  EXPECT_FALSE(std::isnan(field(e.output, "nme_block_2")));
}

TEST_F(Cli, EvalFromTruthReportsZeroNme) {
  const RunResult r = run("eval --size 16 --val-count 5 --init truth");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(field(r.output, "nme_block_0"), 0.0) << r.output;
  EXPECT_EQ(field(r.output, "nme_block_2"), 0.0) << r.output;
}

TEST_F(Cli, ConfigErrorsAreUsageErrors) {
  std::ofstream(path("bad.json")) << R"({"network": {"n_blocks": 2, "colour": 3}})";
  const RunResult r = run("eval --size 16 --val-count 2 --config " + path("bad.json"));
  EXPECT_EQ(r.status, 2) << r.output;
  EXPECT_NE(r.output.find("colour"), std::string::npos) << r.output;
}

}  // namespace
}  // namespace vislayer
