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
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vislayer/annotation.hpp"
#include "vislayer/config_json.hpp"
#include "vislayer/file_util.hpp"
#include "vislayer/image_io.hpp"
#include "vislayer/training.hpp"

namespace vislayer {
namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("vislayer_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Gray8 sample_gray() {
  Gray8 g{5, 3, {}};
  for (int i = 0; i < 15; ++i) g.pixels.push_back(static_cast<std::uint8_t>(i * 17));
  return g;
}

TEST(Quantize, MapsRangeToFullScale) {
  Eigen::MatrixXd m(2, 2);
  m << -1.0, 0.0, 0.5, 1.0;
  ImageRange r;
  const Gray8 g = quantize(m, &r);
  EXPECT_EQ(r.min, -1.0);
  EXPECT_EQ(r.max, 1.0);
  EXPECT_EQ(g.width, 2);
  EXPECT_EQ(g.height, 2);
  EXPECT_EQ(g.pixels, (std::vector<std::uint8_t>{0, 128, 191, 255}));
}

TEST(Quantize, ConstantImageIsBlack) {
  const Gray8 g = quantize(Eigen::MatrixXd::Constant(3, 4, 0.7));
  EXPECT_EQ(g.pixels, std::vector<std::uint8_t>(12, 0));
}

TEST(Quantize, NonFiniteRejected) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(1, 1) = NAN;
  EXPECT_THROW(quantize(m), std::invalid_argument);
}

TEST(Pgm, RoundTrip) {
  const Gray8 g = sample_gray();
  const std::string bytes = encode_pgm(g);
  EXPECT_EQ(bytes.rfind("P5\n5 3\n255\n", 0), 0u);
  const Gray8 back = decode_pgm(bytes);
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.pixels, g.pixels);
}

TEST(Pgm, RejectsBadInput) {
  EXPECT_THROW(decode_pgm("P2\n1 1\n255\n0"), std::runtime_error);
  EXPECT_THROW(decode_pgm("P5\n4 4\n255\n" + std::string(3, 'x')), std::runtime_error);
}

TEST(Png, RoundTrip) {
  const Gray8 g = sample_gray();
  const std::string bytes = encode_png(g);
  EXPECT_EQ(bytes.substr(1, 3), "PNG");
  const Gray8 back = decode_png(bytes);
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.pixels, g.pixels);
  EXPECT_THROW(decode_png("definitely not a png"), std::runtime_error);
}

TEST_F(TempDir, WriteImageWritesSidecar) {
  Eigen::MatrixXd m(2, 3);
  m << 0, 1, 2, 3, 4, 5;
  for (const char* name : {"a.pgm", "b.png"}) {
    const auto path = dir_ / name;
    const ImageRange r = write_image(path, m);
    EXPECT_EQ(r.min, 0.0);
    EXPECT_EQ(r.max, 5.0);
    const Gray8 g = read_image(path);
    EXPECT_EQ(g.width, 3);
    EXPECT_EQ(g.height, 2);
    EXPECT_EQ(g.pixels.back(), 255);
    const std::string side = slurp(sidecar_path(path));
    EXPECT_NE(side.find("min: 0"), std::string::npos) << side;
    EXPECT_NE(side.find("max: 5"), std::string::npos) << side;
  }
  EXPECT_THROW(write_image(dir_ / "c.bmp", m), std::invalid_argument);
}

TEST_F(TempDir, AnnotationRoundTrip) {
  Annotation a;
  a.image = "face_0001.pgm";
  a.bbox = {1.5, 2.5, 30, 40};
  a.landmarks.points.resize(2, 3);
  a.landmarks.points << 1, 2, 3, 4, 5, 6.25;
  a.landmarks.visible = {true, false, true};
  ParamVector p = ParamVector::zeros(3);
  p.camera = CameraMatrix::frontal(2.0, 3.0, 4.0);
  p.shape << 0.1, -0.2, 0.3;
  a.params = p;
  const auto path = dir_ / "a.json";
  save_annotation(a, path);
  const Annotation b = load_annotation(path);
  EXPECT_EQ(b.image, a.image);
  EXPECT_EQ(b.bbox.x, 1.5);
  EXPECT_EQ(b.bbox.height, 40);
  EXPECT_EQ(b.landmarks.points, a.landmarks.points);
  EXPECT_EQ(b.landmarks.visible, a.landmarks.visible);
  ASSERT_TRUE(b.params.has_value());
  EXPECT_EQ(b.params->flat(), p.flat());
}

TEST(Annotation, VisibilityDefaultsToAllAndParamsAreOptional) {
  const Annotation a = annotation_from_json(R"({"bbox": [0, 0, 10, 10], "landmarks": [[1, 2], [3, 4]]})");
  EXPECT_EQ(a.landmarks.visible, (std::vector<bool>{true, true}));
  EXPECT_FALSE(a.params.has_value());
  EXPECT_TRUE(a.image.empty());
}

TEST(Annotation, ErrorsNameTheProblem) {
  auto message = [](const std::string& text) {
    try {
      annotation_from_json(text);
    } catch (const AnnotationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(R"({"landmarks": []})").find("bbox"), std::string::npos);
  EXPECT_NE(message(R"({"bbox": [0, 0, 1], "landmarks": []})").find("bbox"), std::string::npos);
  EXPECT_NE(message(R"({"bbox": [0, 0, 1, 1], "landmarks": [[1, 2]], "visibility": [true, false]})")
                .find("visibility"),
            std::string::npos);
  EXPECT_NE(message(R"({"bbox": [0, 0, 1, 1], "landmarks": [], "params": {"camera": [1], "shape": []}})")
                .find("camera"),
            std::string::npos);
  EXPECT_NE(message("{").find("parse"), std::string::npos);
}

TEST_F(TempDir, MissingAnnotationFileNamesPath) {
  try {
    load_annotation(dir_ / "missing.json");
    FAIL();
  } catch (const AnnotationError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.json"), std::string::npos);
  }
}

TEST(ConfigJson, MaskNames) {
  EXPECT_EQ(parse_mask("1"), MaskKind::kNoseTip);
  EXPECT_EQ(parse_mask("2"), MaskKind::kFivePoint);
  EXPECT_EQ(parse_mask("none"), MaskKind::kNone);
  for (MaskKind k : {MaskKind::kNoseTip, MaskKind::kFivePoint, MaskKind::kNone}) {
    EXPECT_EQ(parse_mask(mask_name(k)), k);
  }
  EXPECT_THROW(parse_mask("3"), ConfigError);
}

TEST(ConfigJson, BlockConfigRoundTrip) {
  BlockConfig c;
  c.n_blocks = 3;
  c.image_size = 32;
  c.inputs = BlockInputs::kFeaturesVisualization;
  c.filters = {{{2, 3}, {3, 5}}, {{4, 3}, {4, 3}}, {{5, 3}, {5, 3}}};
  c.loss_kinds = {BlockLoss::kParameter, BlockLoss::kLandmark, BlockLoss::kLandmark};
  c.loss_weights = {1, 2, 5};
  c.raster.mask = MaskKind::kFivePoint;
  c.raster.sigma = 1.5;
  BlockConfig d;
  update_from_json(to_json(c), d);
  EXPECT_EQ(d.n_blocks, 3);
  EXPECT_EQ(d.image_size, 32);
  EXPECT_EQ(d.inputs, BlockInputs::kFeaturesVisualization);
  ASSERT_EQ(d.filters.size(), 3u);
  EXPECT_EQ(d.filters[0][1].filters, 3);
  EXPECT_EQ(d.filters[0][1].kernel, 5);
  EXPECT_EQ(d.loss_kinds, c.loss_kinds);
  EXPECT_EQ(d.loss_weights, c.loss_weights);
  EXPECT_EQ(d.raster.mask, MaskKind::kFivePoint);
  EXPECT_EQ(d.raster.sigma, 1.5);
}

TEST(ConfigJson, TrainAndDataRoundTrip) {
  TrainOptions t;
  t.epochs = 7;
  t.learning_rate = 3e-7;
  t.max_shift = 2;
  t.backward.detach_parameter_path = true;
  TrainOptions t2;
  update_from_json(to_json(t), t2);
  EXPECT_EQ(t2.epochs, 7);
  EXPECT_EQ(t2.learning_rate, 3e-7);
  EXPECT_EQ(t2.max_shift, 2);
  EXPECT_TRUE(t2.backward.detach_parameter_path);

  DatasetOptions o;
  o.count = 17;
  o.photo.mask = MaskKind::kNoseTip;
  DatasetOptions o2;
  update_from_json(to_json(o), o2);
  EXPECT_EQ(o2.count, 17);
  EXPECT_EQ(o2.photo.mask, MaskKind::kNoseTip);
}

TEST(ConfigJson, PartialUpdateKeepsOtherValues) {
  TrainOptions t;
  t.batch_size = 4;
  update_from_json(Json::parse(R"({"epochs": 2})"), t);
  EXPECT_EQ(t.epochs, 2);
  EXPECT_EQ(t.batch_size, 4);
}

TEST(ConfigJson, UnknownKeysAndBadTypesAreNamed) {
  BlockConfig c;
  try {
    update_from_json(Json::parse(R"({"raster": {"sigmaa": 1}})"), c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("network.raster.sigmaa"), std::string::npos) << e.what();
  }
  TrainOptions t;
  try {
    update_from_json(Json::parse(R"({"epochs": "many"})"), t);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("epochs"), std::string::npos) << e.what();
  }
  EXPECT_THROW(update_from_json(Json::parse(R"({"inputs": "XYZ"})"), c), ConfigError);
}

TEST_F(TempDir, CheckpointFileRoundTrip) {
  const ShapeModel& m = testing::small_model();
  BlockConfig c;
  c.image_size = 8;
  c.filters = {{{2, 3}, {2, 3}}, {{2, 3}, {2, 3}}};
  c.fc_sizes = {6, 0};
  NetworkWeights w = NetworkWeights::create(c, kCameraParams + m.num_shape_params(), 3, false);
  const auto path = dir_ / "ckpt.json";
  save_checkpoint(w, path);
  NetworkWeights back = load_checkpoint(path);
  EXPECT_EQ(back.param_dim, w.param_dim);
  EXPECT_EQ(back.blocks[1].fc2.weight, w.blocks[1].fc2.weight);
  EXPECT_EQ(back.blocks[0].convs[1].weight, w.blocks[0].convs[1].weight);
  EXPECT_ANY_THROW(load_checkpoint(dir_ / "nothing.json"));
}

TEST_F(TempDir, AtomicWriteReplacesContents) {
  const auto path = dir_ / "f.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  EXPECT_EQ(read_file(path), "second");
  EXPECT_THROW(read_file(dir_ / "absent.txt"), std::runtime_error);
}

}  // namespace
}  // namespace vislayer
