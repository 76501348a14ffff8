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
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vislayer/dataset.hpp"
#include "vislayer/gradcheck.hpp"
#include "vislayer/losses.hpp"
#include "vislayer/network.hpp"
#include "vislayer/training.hpp"

namespace vislayer {
namespace {

struct Fixture {
  ShapeModel model = generate_synthetic_model(3, 60, 2, 2);
  std::vector<FaceSample> samples;
  Tensor images;
  std::vector<ParamVector> initial;
  std::vector<LossTarget> targets;
  LossWeights loss_weights;
  int dim = 0;

  explicit Fixture(int size = 8, int count = 3) {
    DatasetOptions o;
    o.seed = 11;
    o.count = count;
    o.image_size = size;
    o.max_yaw_deg = 45.0;
    samples = generate_synthetic_dataset(model, o);
    std::vector<int> idx;
    std::vector<ParamVector> truths;
    for (int i = 0; i < count; ++i) {
      idx.push_back(i);
      initial.push_back(samples[i].initial);
      targets.push_back({samples[i].truth, samples[i].landmarks});
      truths.push_back(samples[i].truth);
    }
    images = batch_images(samples, idx);
    loss_weights = build_weights(model, truths);
    dim = kCameraParams + model.num_shape_params();
  }

  BlockConfig config(int blocks = 2, BlockInputs inputs = BlockInputs::kImageFeaturesVisualization) const {
    BlockConfig c;
    c.n_blocks = blocks;
    c.image_size = samples[0].image.rows();
    c.filters.assign(blocks, {{3, 3}, {3, 3}});
    c.fc_sizes = {12, 0};
    c.dropout = 0.0;
    c.inputs = inputs;
    return c;
  }

  NetworkWeights random_weights(const BlockConfig& c, std::uint64_t seed = 5) const {
    NetworkWeights w = NetworkWeights::create(c, dim, seed, false);
    w.output_scale = update_scale(samples);
    w.output_scale *= 0.1;
    return w;
  }
};

std::vector<Eigen::VectorXd> flatten(NetworkWeights& w) {
  std::vector<Eigen::VectorXd> out;
  w.for_each_trainable([&](const std::string&, std::vector<int>, Eigen::Map<Eigen::VectorXd> v) {
    out.emplace_back(v);
  });
  return out;
}

Eigen::VectorXd block_gradient(NetworkWeights& g, int block) {
  std::vector<double> values;
  const std::string prefix = "block" + std::to_string(block) + ".";
  g.for_each_trainable([&](const std::string& name, std::vector<int>, Eigen::Map<Eigen::VectorXd> v) {
    if (name.rfind(prefix, 0) == 0) values.insert(values.end(), v.data(), v.data() + v.size());
  });
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

TEST(BlockConfig, DefaultsResolve) {
  BlockConfig c;
  c.n_blocks = 4;
  c.resolve(20);
  ASSERT_EQ(c.loss_kinds.size(), 4u);
  EXPECT_EQ(c.loss_kinds[0], BlockLoss::kParameter);
  EXPECT_EQ(c.loss_kinds[1], BlockLoss::kParameter);
  EXPECT_EQ(c.loss_kinds[2], BlockLoss::kLandmark);
  EXPECT_EQ(c.loss_kinds[3], BlockLoss::kLandmark);
  EXPECT_EQ(c.loss_weights, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(c.fc_sizes[1], 20);
  EXPECT_EQ(c.filters.size(), 4u);
}

TEST(BlockConfig, RejectsInvalidSettings) {
  BlockConfig c;
  c.image_size = 7;
  EXPECT_THROW(c.resolve(20), std::invalid_argument);
  c = BlockConfig();
  c.n_blocks = 0;
  EXPECT_THROW(c.resolve(20), std::invalid_argument);
  c = BlockConfig();
  c.fc_sizes = {10, 19};
  EXPECT_THROW(c.resolve(20), std::invalid_argument);
  c = BlockConfig();
  c.dropout = 1.0;
  EXPECT_THROW(c.resolve(20), std::invalid_argument);
}

TEST(Network, ZeroInitialisedOutputIsIdentity) {
  Fixture f;
  NetworkWeights w = NetworkWeights::create(f.config(), f.dim, 1);
  const NetworkOutput out = network_forward(f.model, w, f.images, f.initial);
  ASSERT_EQ(out.params.size(), 3u);
  for (const auto& stage : out.params) {
    for (std::size_t b = 0; b < stage.size(); ++b) EXPECT_EQ(stage[b].flat(), f.initial[b].flat());
  }
}

TEST(Network, ImageVisualizationVariantHasFewerChannels) {
  Fixture f;
  const NetworkWeights full = NetworkWeights::create(f.config(), f.dim, 1);
  const NetworkWeights iv =
      NetworkWeights::create(f.config(2, BlockInputs::kImageVisualization), f.dim, 1);
  const NetworkWeights fv =
      NetworkWeights::create(f.config(2, BlockInputs::kFeaturesVisualization), f.dim, 1);
  EXPECT_LT(iv.blocks[1].convs[0].in, full.blocks[1].convs[0].in);
  EXPECT_LT(fv.blocks[1].convs[0].in, full.blocks[1].convs[0].in);
  EXPECT_EQ(full.blocks[0].convs[0].in, iv.blocks[0].convs[0].in);
}

TEST(Network, AllInputVariantsRunForwardAndBackward) {
  Fixture f;
  for (BlockInputs in : {BlockInputs::kImageFeaturesVisualization, BlockInputs::kFeaturesVisualization,
                         BlockInputs::kImageVisualization}) {
    NetworkWeights w = f.random_weights(f.config(2, in));
    const NetworkOutput out = network_forward(f.model, w, f.images, f.initial, {.training = true});
    const BlockLosses l = block_losses(f.model, w, out, f.targets, f.loss_weights);
    EXPECT_TRUE(std::isfinite(l.total));
    NetworkGradients g = network_backward(f.model, w, out, l.output_grads);
    for (const Eigen::VectorXd& v : flatten(g.weights)) EXPECT_TRUE(v.allFinite());
  }
}

TEST(Network, DeterministicWithoutDropout) {
  Fixture f;
  NetworkWeights w = f.random_weights(f.config());
  const NetworkOutput a = network_forward(f.model, w, f.images, f.initial);
  const NetworkOutput b = network_forward(f.model, w, f.images, f.initial);
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    for (std::size_t s = 0; s < a.params[i].size(); ++s) EXPECT_EQ(a.params[i][s].flat(), b.params[i][s].flat());
  }
}

TEST(Network, DropoutSeedControlsMask) {
  Fixture f;
  BlockConfig c = f.config();
  c.dropout = 0.5;
  NetworkWeights w = f.random_weights(c);
  ForwardOptions o{.training = true, .dropout_seed = 3};
  const NetworkOutput a = network_forward(f.model, w, f.images, f.initial, o);
  const NetworkOutput b = network_forward(f.model, w, f.images, f.initial, o);
  EXPECT_EQ(a.blocks[0].dropout_mask, b.blocks[0].dropout_mask);
  o.dropout_seed = 4;
  const NetworkOutput d = network_forward(f.model, w, f.images, f.initial, o);
  EXPECT_NE(a.blocks[0].dropout_mask, d.blocks[0].dropout_mask);
}

TEST(Network, BlockOutputsAddTheirUpdates) {
  Fixture f;
  NetworkWeights w = f.random_weights(f.config(3));
  const NetworkOutput out = network_forward(f.model, w, f.images, f.initial);
  for (int i = 1; i <= 3; ++i) {
    for (int s = 0; s < out.batch; ++s) {
      const Eigen::VectorXd diff = out.params[i][s].flat() - out.params[i - 1][s].flat();
      const Eigen::VectorXd delta = out.blocks[i - 1].delta.col(s);
      EXPECT_LE((diff - delta).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + out.params[i][s].flat().cwiseAbs().maxCoeff()));
      EXPECT_GT(delta.cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(Network, SingleBlock) {
  Fixture f;
  NetworkWeights w = f.random_weights(f.config(1));
  const NetworkOutput out = network_forward(f.model, w, f.images, f.initial);
  EXPECT_EQ(out.params.size(), 2u);
  EXPECT_EQ(out.blocks.size(), 1u);
  const BlockLosses l = block_losses(f.model, w, out, f.targets, f.loss_weights);
  EXPECT_EQ(l.loss.size(), 1u);
  NetworkGradients g = network_backward(f.model, w, out, l.output_grads);
  EXPECT_GT(block_gradient(g.weights, 0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Network, LaterBlocksRenderAtHalfResolution) {
  Fixture f(16, 2);
  NetworkWeights w = f.random_weights(f.config(2));
  const NetworkOutput out = network_forward(f.model, w, f.images, f.initial);
  EXPECT_EQ(out.visualization(0).h, 16);
  EXPECT_EQ(out.visualization(1).h, 8);
}

TEST(Network, HalfResolutionCameraMapsPixelCentres) {
  std::mt19937_64 rng(2);
  const ShapeModel& m = testing::small_model();
  const ParamVector p = random_params(m, 32, rng);
  const Eigen::Matrix2Xd full = project_all(m, p);
  const Eigen::Matrix2Xd half = project_all(m, to_half_resolution(p));
  EXPECT_LE((half - (0.5 * full.array() - 0.25).matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(to_half_resolution(p).shape, p.shape);
}

TEST(Network, LossWeightsScaleGradientsLinearly) {
  Fixture f;
  BlockConfig c = f.config();
  NetworkWeights w = f.random_weights(c);
  const NetworkOutput out = network_forward(f.model, w, f.images, f.initial, {.training = true});
  auto grads_for = [&](std::vector<double> lw) {
    w.config.loss_weights = lw;
    const BlockLosses l = block_losses(f.model, w, out, f.targets, f.loss_weights);
    NetworkGradients g = network_backward(f.model, w, out, l.output_grads);
    Eigen::VectorXd all(0);
    for (const Eigen::VectorXd& v : flatten(g.weights)) {
      Eigen::VectorXd next(all.size() + v.size());
      next << all, v;
      all = next;
    }
    return all;
  };
  const Eigen::VectorXd only1 = grads_for({1, 0});
  const Eigen::VectorXd only2 = grads_for({0, 1});
  const Eigen::VectorXd sched = grads_for({1, 2});
  const Eigen::VectorXd doubled = grads_for({2, 4});
  const double scale = sched.cwiseAbs().maxCoeff();
  EXPECT_LE((sched - (only1 + 2.0 * only2)).cwiseAbs().maxCoeff(), 1e-10 * scale);
  EXPECT_LE((doubled - 2.0 * sched).cwiseAbs().maxCoeff(), 1e-10 * scale);
  const BlockLosses l = block_losses(f.model, w, out, f.targets, f.loss_weights);
  EXPECT_NEAR(l.total, 2.0 * l.loss[0] + 4.0 * l.loss[1], 1e-9 * l.total);
}

TEST(Network, DetachingParameterPathChangesFirstBlockGradient) {
  Fixture f;
  NetworkWeights w = f.random_weights(f.config());
  const NetworkOutput out = network_forward(f.model, w, f.images, f.initial, {.training = true});
  const BlockLosses l = block_losses(f.model, w, out, f.targets, f.loss_weights);
  NetworkGradients coupled = network_backward(f.model, w, out, l.output_grads);
  NetworkGradients detached = network_backward(f.model, w, out, l.output_grads, {.detach_parameter_path = true});
  const Eigen::VectorXd a = block_gradient(coupled.weights, 0);
  const Eigen::VectorXd b = block_gradient(detached.weights, 0);
  EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-8 * a.cwiseAbs().maxCoeff());
  // The last block's own gradient does not depend on the inter-block path.
  EXPECT_EQ(block_gradient(coupled.weights, 1), block_gradient(detached.weights, 1));
}

TEST(Network, VisualizationPathContributesToFirstBlockGradient) {
  Fixture f;
  NetworkWeights w = f.random_weights(f.config());
  const NetworkOutput out = network_forward(f.model, w, f.images, f.initial, {.training = true});
  const BlockLosses l = block_losses(f.model, w, out, f.targets, f.loss_weights);
  NetworkGradients with = network_backward(f.model, w, out, l.output_grads);
  NetworkGradients without = network_backward(f.model, w, out, l.output_grads, {.detach_visualization = true});
  const Eigen::VectorXd a = block_gradient(with.weights, 0);
  const Eigen::VectorXd b = block_gradient(without.weights, 0);
  EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-8 * a.cwiseAbs().maxCoeff());
}

TEST(Network, ConstantVisualizationFeedsBackground) {
  Fixture f;
  BlockConfig c = f.config();
  c.raster.background_value = 0.25;
  NetworkWeights w = f.random_weights(c);
  const NetworkOutput out =
      network_forward(f.model, w, f.images, f.initial, {.constant_visualization = true});
  for (int b = 0; b < 2; ++b) {
    EXPECT_EQ(out.visualization(b).data, Eigen::VectorXd::Constant(out.visualization(b).data.size(), 0.25));
    EXPECT_TRUE(out.blocks[b].renders.empty());
  }
}

TEST(Network, EndToEndGradientCheck) {
  GradcheckOptions o;
  o.seed = 3;
  const CategoryReport r = check_network(o);
  EXPECT_TRUE(r.passed()) << r.max_error << " at " << r.worst_label;
  EXPECT_GE(r.trials, 50);
}

TEST(Network, WrongBatchShapesRejected) {
  Fixture f;
  NetworkWeights w = f.random_weights(f.config());
  std::vector<ParamVector> two(f.initial.begin(), f.initial.begin() + 2);
  EXPECT_THROW(network_forward(f.model, w, f.images, two), std::invalid_argument);
  Tensor wrong(3, 1, 10, 10);
  EXPECT_THROW(network_forward(f.model, w, wrong, f.initial), std::invalid_argument);
}

TEST(Checkpoint, RoundTripPreservesOutputs) {
  Fixture f;
  NetworkWeights w = f.random_weights(f.config());
  w.blocks[0].norms[0].running_mean.setConstant(0.3);
  const NetworkWeights back = checkpoint_from_json(checkpoint_to_json(w));
  NetworkWeights copy = back;
  const NetworkOutput a = network_forward(f.model, w, f.images, f.initial);
  const NetworkOutput b = network_forward(f.model, copy, f.images, f.initial);
  EXPECT_EQ(a.params.back()[0].flat(), b.params.back()[0].flat());
  EXPECT_EQ(copy.output_scale, w.output_scale);
  EXPECT_EQ(copy.blocks[0].norms[0].running_mean, w.blocks[0].norms[0].running_mean);
}

TEST(Checkpoint, RejectsForeignDocuments) {
  EXPECT_ANY_THROW(checkpoint_from_json("{\"format\": \"other\"}"));
  EXPECT_ANY_THROW(checkpoint_from_json("not json"));
}

TEST(TrainToy, FixedSeedReproducesTrajectory) {
  Fixture f(16, 12);
  std::vector<FaceSample> train(f.samples.begin(), f.samples.begin() + 8);
  std::vector<FaceSample> val(f.samples.begin() + 8, f.samples.end());
  BlockConfig c = f.config();
  TrainOptions o;
  o.epochs = 2;
  o.batch_size = 4;
  o.learning_rate = 1e-7;
  o.max_shift = 1;
  const TrainResult a = train_toy(f.model, c, train, val, o);
  const TrainResult b = train_toy(f.model, c, train, val, o);
  ASSERT_EQ(a.history.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
    EXPECT_EQ(a.history[e].validation.nme, b.history[e].validation.nme);
  }
  EXPECT_EQ(a.initial_validation.nme.size(), 3u);
  EXPECT_EQ(a.initial_validation.nme[0], a.initial_validation.nme[2]);
}

TEST(TrainToy, DivergenceIsReported) {
  Fixture f(16, 12);
  std::vector<FaceSample> train(f.samples.begin(), f.samples.begin() + 8);
  std::vector<FaceSample> val(f.samples.begin() + 8, f.samples.end());
  TrainOptions o;
  o.epochs = 30;
  o.batch_size = 4;
  o.learning_rate = 1e3;
  EXPECT_THROW(train_toy(f.model, f.config(), train, val, o), TrainingError);
}

TEST(TrainToy, RejectsBadOptions) {
  Fixture f(16, 4);
  TrainOptions o;
  o.learning_rate = 0.0;
  EXPECT_THROW(train_toy(f.model, f.config(), f.samples, f.samples, o), std::invalid_argument);
  o = TrainOptions();
  EXPECT_THROW(train_toy(f.model, f.config(), f.samples, {}, o), std::invalid_argument);
}

// Baseline with the default options: 22.96% -> 9.32% on the final block.
TEST(TrainToy, TwoBlocksCutValidationNme) {
  const ShapeModel model = generate_synthetic_model(SyntheticModelOptions{});
  DatasetOptions data;
  data.image_size = 32;
  data.count = 200;
  const std::vector<FaceSample> train = generate_synthetic_dataset(model, data);
  data.seed = 2;
  data.count = 100;
  const std::vector<FaceSample> validation = generate_synthetic_dataset(model, data);
  BlockConfig config;
  config.image_size = 32;
  const TrainResult r = train_toy(model, config, train, validation, TrainOptions{});
  const double initial = r.initial_validation.nme.back();
  const double final_nme = r.history.back().validation.nme.back();
  EXPECT_EQ(r.history.size(), 30u);
  EXPECT_LE(final_nme * 2.0, initial) << "initial " << initial << " final " << final_nme;
}

TEST(UpdateScale, IsStddevOfResidual) {
  Fixture f(16, 6);
  const Eigen::VectorXd s = update_scale(f.samples);
  const int k = 3;
  double mean = 0.0;
  for (const FaceSample& x : f.samples) mean += x.truth.camera[k] - x.initial.camera[k];
  mean /= 6.0;
  double var = 0.0;
  for (const FaceSample& x : f.samples) var += std::pow(x.truth.camera[k] - x.initial.camera[k] - mean, 2);
  EXPECT_NEAR(s[k], std::sqrt(var / 6.0), 1e-12);
}

}  // namespace
}  // namespace vislayer
