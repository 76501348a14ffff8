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
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "vislayer/camera.hpp"
#include "vislayer/losses.hpp"
#include "vislayer/morphable_model.hpp"
#include "vislayer/tensor_ops.hpp"
#include "vislayer/visualization_layer.hpp"

namespace vislayer {

// Which maps a block concatenates before its convolutions. Block 1 has no
// previous features and always uses {I, V}.
enum class BlockInputs {
  kImageFeaturesVisualization,  // {I, F, V}
  kFeaturesVisualization,       // {F, V}
  kImageVisualization,          // {I, V}
};

enum class BlockLoss { kParameter, kLandmark };

struct ConvSpec {
  int filters = 1;
  int kernel = 3;
};

// Architecture of the stacked visualization blocks.
struct BlockConfig {
  int n_blocks = 2;
  int convs_per_block = 2;
  // Input image side. Block 1 runs at this resolution and pools to half after
  // its first convolution; later blocks (and their renderings) run at half.
  int image_size = 64;
  // Per block, convs_per_block entries. Empty: the stock six-block filter counts divided by 4.
  std::vector<std::vector<ConvSpec>> filters;
  // Hidden width and output width. 0 means: hidden = round(800 * dim / 236),
  // output = dim(P).
  std::array<int, 2> fc_sizes = {0, 0};
  double dropout = 0.2;
  BlockInputs inputs = BlockInputs::kImageFeaturesVisualization;
  // Empty: first half parameter loss, second half landmark loss.
  std::vector<BlockLoss> loss_kinds;
  // Empty: 1, 2, ..., n_blocks.
  std::vector<double> loss_weights;
  // sigma, support radius, mask and background for the in-network renderings;
  // width/height are overwritten per block.
  RasterConfig raster;

  // Fills defaults and validates against the parameter dimension.
  void resolve(int param_dim);
  int feature_size() const { return image_size / 2; }
  int block_resolution(int block) const { return block == 0 ? image_size : image_size / 2; }
};

struct BlockWeights {
  std::vector<Conv2d> convs;
  std::vector<BatchNorm2d> norms;
  Linear fc1;
  Linear fc2;
};

// Trainable parameters plus batch-norm running statistics and the fixed
// per-parameter output scale applied to the last fully connected layer.
struct NetworkWeights {
  BlockConfig config;
  int param_dim = 0;
  std::vector<BlockWeights> blocks;
  Eigen::VectorXd output_scale;

  // He-initialised; with zero_init_output the last layer starts at zero so
  // the untrained network is the identity on P.
  static NetworkWeights create(BlockConfig config, int param_dim, std::uint64_t seed,
                               bool zero_init_output = true);
  // Same shapes, all trainable values zero (used as a gradient accumulator).
  NetworkWeights zeros_like() const;

  using Visitor = std::function<void(const std::string& name, std::vector<int> shape,
                                     Eigen::Map<Eigen::VectorXd> values)>;
  // Trainable tensors in a fixed order.
  void for_each_trainable(const Visitor& fn);
  // Running statistics and output scale.
  void for_each_state(const Visitor& fn);
  Eigen::Index num_trainable();
};

struct ForwardOptions {
  bool training = false;          // batch statistics + dropout
  bool update_running_stats = false;
  std::uint64_t dropout_seed = 0;
  bool constant_visualization = false;  // feed V = background, no rasterizer
  // Optional frozen support sets: [block][sample] from a previous forward.
  const std::vector<std::vector<VisualizationOutput>>* frozen_support = nullptr;
};

struct BlockCache {
  int resolution = 0;
  Tensor image;
  Tensor visualization;
  Tensor input;
  std::vector<Conv2d::Cache> conv_caches;
  std::vector<BatchNorm2d::Cache> norm_caches;
  std::vector<Tensor> activations;  // post-ReLU output of each conv stage
  MaxPoolCache pool_cache;
  Tensor features;
  Eigen::MatrixXd fc_input;
  Eigen::MatrixXd hidden;   // post-ReLU fc1
  Eigen::MatrixXd dropout_mask;
  Eigen::MatrixXd dropped;  // hidden after dropout
  Eigen::MatrixXd delta;    // dim x batch, the emitted update
  std::vector<ParamVector> render_params;
  std::vector<VisualizationOutput> renders;
};

struct NetworkOutput {
  // params[0] = P0; params[i] = output of block i. Indexed [i][sample].
  std::vector<std::vector<ParamVector>> params;
  std::vector<BlockCache> blocks;
  ForwardOptions options;
  int batch = 0;

  const Tensor& visualization(int block) const { return blocks[block].visualization; }
};

// `images` is B x 1 x S x S; `initial` holds one P0 per sample.
NetworkOutput network_forward(const ShapeModel& model, NetworkWeights& weights,
                              const Tensor& images, const std::vector<ParamVector>& initial,
                              const ForwardOptions& options = {});

// Per-sample supervision.
struct LossTarget {
  ParamVector truth;
  LandmarkSet landmarks;
};

struct BlockLosses {
  std::vector<double> loss;  // per block, batch mean, unweighted
  double total = 0.0;        // sum_i weight_i * loss_i
  // Per block: d total / d P^i, dim x batch (already weighted and averaged).
  std::vector<Eigen::MatrixXd> output_grads;
};

BlockLosses block_losses(const ShapeModel& model, const NetworkWeights& weights,
                         const NetworkOutput& output, const std::vector<LossTarget>& targets,
                         const LossWeights& param_weights);

struct BackwardOptions {
  bool detach_parameter_path = false;  // no gradient from block i into P^{i-1}
  bool detach_visualization = false;   // keep V, drop the rasterizer gradient
};

struct NetworkGradients {
  NetworkWeights weights;       // same layout as the network, values are gradients
  Eigen::MatrixXd initial_params;  // dim x batch
  Tensor images;
};

NetworkGradients network_backward(const ShapeModel& model, const NetworkWeights& weights,
                                  const NetworkOutput& output,
                                  const std::vector<Eigen::MatrixXd>& output_grads,
                                  const BackwardOptions& options = {});

// Camera expressed in the pixel grid of a 2x average-pooled image.
ParamVector to_half_resolution(const ParamVector& params);

}  // namespace vislayer
