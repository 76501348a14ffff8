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
#include "vislayer/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace vislayer {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Stock six-block filter counts divided by four.
std::vector<ConvSpec> default_filters(int block, int convs) {
  static const ConvSpec kTable[][2] = {
      {{3, 5}, {4, 5}}, {{5, 3}, {6, 3}}, {{7, 3}, {8, 3}}, {{9, 3}, {10, 3}}, {{10, 3}, {10, 3}}};
  const auto& row = kTable[std::min(block, 4)];
  std::vector<ConvSpec> out;
  for (int j = 0; j < convs; ++j) out.push_back(row[std::min(j, 1)]);
  return out;
}

int input_channels(const BlockConfig& cfg, int block, int prev_features) {
  if (block == 0) return 2;
  switch (cfg.inputs) {
    case BlockInputs::kImageFeaturesVisualization:
      return prev_features + 2;
    case BlockInputs::kFeaturesVisualization:
      return prev_features + 1;
    case BlockInputs::kImageVisualization:
      return 2;
  }
  return 2;
}

Tensor visualization_tensor(const std::vector<VisualizationOutput>& renders, int res) {
  Tensor v(static_cast<int>(renders.size()), 1, res, res);
  for (int b = 0; b < v.n; ++b) {
    Eigen::Map<RowMajorMatrix>(v.data.data() + b * v.sample_size(), res, res) = renders[b].image;
  }
  return v;
}

Tensor avg_pool2_backward(const Tensor& grad_out, int in_h, int in_w) {
  Tensor dx(grad_out.n, grad_out.c, in_h, in_w);
  for (int i = 0; i < grad_out.n; ++i) {
    for (int c = 0; c < grad_out.c; ++c) {
      for (int y = 0; y < grad_out.h; ++y) {
        for (int u = 0; u < grad_out.w; ++u) {
          const double g = 0.25 * grad_out.at(i, c, y, u);
          dx.at(i, c, 2 * y, 2 * u) += g;
          dx.at(i, c, 2 * y, 2 * u + 1) += g;
          dx.at(i, c, 2 * y + 1, 2 * u) += g;
          dx.at(i, c, 2 * y + 1, 2 * u + 1) += g;
        }
      }
    }
  }
  return dx;
}

}  // namespace

void BlockConfig::resolve(int param_dim) {
  if (n_blocks < 1) throw std::invalid_argument("n_blocks must be >= 1");
  if (convs_per_block < 1) throw std::invalid_argument("convs_per_block must be >= 1");
  if (image_size < 4 || image_size % 2 != 0) {
    throw std::invalid_argument("image_size must be even and >= 4");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
  if (filters.empty()) {
    for (int b = 0; b < n_blocks; ++b) filters.push_back(default_filters(b, convs_per_block));
  }
  if (static_cast<int>(filters.size()) != n_blocks) {
    throw std::invalid_argument("filters must list one entry per block");
  }
  for (const auto& f : filters) {
    if (static_cast<int>(f.size()) != convs_per_block) {
      throw std::invalid_argument("each block needs convs_per_block filter specs");
    }
    for (const ConvSpec& s : f) {
      if (s.filters < 1 || s.kernel < 1 || s.kernel % 2 == 0) {
        throw std::invalid_argument("filter specs need positive counts and odd kernels");
      }
    }
  }
  if (fc_sizes[0] <= 0) {
    fc_sizes[0] = std::max(8, static_cast<int>(std::lround(800.0 * param_dim / 236.0)));
  }
  if (fc_sizes[1] <= 0) fc_sizes[1] = param_dim;
  if (fc_sizes[1] != param_dim) {
    throw std::invalid_argument("final fully connected width must equal dim(P) = " +
                                std::to_string(param_dim));
  }
  if (loss_kinds.empty()) {
    for (int b = 0; b < n_blocks; ++b) {
      loss_kinds.push_back(b < n_blocks / 2 ? BlockLoss::kParameter : BlockLoss::kLandmark);
    }
  }
  if (static_cast<int>(loss_kinds.size()) != n_blocks) {
    throw std::invalid_argument("loss_kinds must list one entry per block");
  }
  if (loss_weights.empty()) {
    for (int b = 0; b < n_blocks; ++b) loss_weights.push_back(b + 1.0);
  }
  if (static_cast<int>(loss_weights.size()) != n_blocks) {
    throw std::invalid_argument("loss_weights must list one entry per block");
  }
  raster.width = raster.height = image_size;
  raster.validate();
}

NetworkWeights NetworkWeights::create(BlockConfig config, int param_dim, std::uint64_t seed,
                                      bool zero_init_output) {
  config.resolve(param_dim);
  NetworkWeights w;
  w.config = config;
  w.param_dim = param_dim;
  w.output_scale = Eigen::VectorXd::Ones(param_dim);
  std::mt19937_64 rng(seed);
  int prev_features = 0;
  for (int b = 0; b < config.n_blocks; ++b) {
    BlockWeights bw;
    int channels = input_channels(config, b, prev_features);
    for (const ConvSpec& s : config.filters[b]) {
      Conv2d conv(channels, s.filters, s.kernel);
      conv.init(rng);
      bw.convs.push_back(std::move(conv));
      bw.norms.emplace_back(s.filters);
      channels = s.filters;
    }
    prev_features = channels;
    const int fs = config.feature_size();
    bw.fc1 = Linear(channels * fs * fs, config.fc_sizes[0]);
    bw.fc1.init(rng);
    bw.fc2 = Linear(config.fc_sizes[0], param_dim);
    if (!zero_init_output) bw.fc2.init(rng);
    w.blocks.push_back(std::move(bw));
  }
  return w;
}

NetworkWeights NetworkWeights::zeros_like() const {
  NetworkWeights z = *this;
  z.for_each_trainable([](const std::string&, std::vector<int>, Eigen::Map<Eigen::VectorXd> v) {
    v.setZero();
  });
  return z;
}

void NetworkWeights::for_each_trainable(const Visitor& fn) {
  auto map = [](auto& m) { return Eigen::Map<Eigen::VectorXd>(m.data(), m.size()); };
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    BlockWeights& bw = blocks[b];
    const std::string prefix = "block" + std::to_string(b) + ".";
    for (std::size_t j = 0; j < bw.convs.size(); ++j) {
      Conv2d& c = bw.convs[j];
      const std::string name = prefix + "conv" + std::to_string(j);
      fn(name + ".weight", {c.out, c.in, c.kernel, c.kernel}, map(c.weight));
      fn(name + ".bias", {c.out}, map(c.bias));
      BatchNorm2d& n = bw.norms[j];
      const std::string bn = prefix + "bn" + std::to_string(j);
      fn(bn + ".gamma", {n.channels}, map(n.gamma));
      fn(bn + ".beta", {n.channels}, map(n.beta));
    }
    fn(prefix + "fc1.weight", {bw.fc1.out, bw.fc1.in}, map(bw.fc1.weight));
    fn(prefix + "fc1.bias", {bw.fc1.out}, map(bw.fc1.bias));
    fn(prefix + "fc2.weight", {bw.fc2.out, bw.fc2.in}, map(bw.fc2.weight));
    fn(prefix + "fc2.bias", {bw.fc2.out}, map(bw.fc2.bias));
  }
}

void NetworkWeights::for_each_state(const Visitor& fn) {
  auto map = [](auto& m) { return Eigen::Map<Eigen::VectorXd>(m.data(), m.size()); };
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t j = 0; j < blocks[b].norms.size(); ++j) {
      BatchNorm2d& n = blocks[b].norms[j];
      const std::string bn = "block" + std::to_string(b) + ".bn" + std::to_string(j);
      fn(bn + ".running_mean", {n.channels}, map(n.running_mean));
      fn(bn + ".running_var", {n.channels}, map(n.running_var));
    }
  }
  fn("output_scale", {static_cast<int>(output_scale.size())}, map(output_scale));
}

Eigen::Index NetworkWeights::num_trainable() {
  Eigen::Index total = 0;
  for_each_trainable([&](const std::string&, std::vector<int>, Eigen::Map<Eigen::VectorXd> v) {
    total += v.size();
  });
  return total;
}

ParamVector to_half_resolution(const ParamVector& params) {
  // Pooled pixel k covers full pixels 2k and 2k+1: x_half = (x - 0.5) / 2.
  ParamVector out = params;
  for (int k = 0; k < kCameraParams; ++k) out.camera[k] *= 0.5;
  out.camera[3] -= 0.25;
  out.camera[7] -= 0.25;
  return out;
}

NetworkOutput network_forward(const ShapeModel& model, NetworkWeights& weights,
                              const Tensor& images, const std::vector<ParamVector>& initial,
                              const ForwardOptions& options) {
  const BlockConfig& cfg = weights.config;
  const int batch = images.n;
  if (images.c != 1 || images.h != cfg.image_size || images.w != cfg.image_size) {
    throw std::invalid_argument("network_forward: images must be B x 1 x " +
                                std::to_string(cfg.image_size) + " x " +
                                std::to_string(cfg.image_size));
  }
  if (static_cast<int>(initial.size()) != batch) {
    throw std::invalid_argument("network_forward: one initial parameter vector per image needed");
  }
  for (const ParamVector& p : initial) {
    check_dimensions(model, p);
    if (p.size() != weights.param_dim) {
      throw std::invalid_argument("network_forward: parameter dimension does not match weights");
    }
  }
  if (options.frozen_support != nullptr &&
      static_cast<int>(options.frozen_support->size()) != cfg.n_blocks) {
    throw std::invalid_argument("network_forward: frozen support needs one entry per block");
  }

  NetworkOutput out;
  out.options = options;
  out.batch = batch;
  out.params.push_back(initial);
  const Tensor half_images = avg_pool2(images);
  std::mt19937_64 dropout_rng(options.dropout_seed);

  for (int i = 0; i < cfg.n_blocks; ++i) {
    BlockWeights& bw = weights.blocks[i];
    BlockCache cache;
    cache.resolution = cfg.block_resolution(i);
    const int res = cache.resolution;
    cache.image = i == 0 ? images : half_images;
    const std::vector<ParamVector>& p_in = out.params.back();

    RasterConfig rc = cfg.raster;
    rc.width = rc.height = res;
    if (options.constant_visualization) {
      cache.visualization = Tensor(batch, 1, res, res);
      cache.visualization.data.setConstant(rc.background_value);
    } else {
      for (int b = 0; b < batch; ++b) {
        ParamVector pr = res == cfg.image_size ? p_in[b] : to_half_resolution(p_in[b]);
        if (options.frozen_support != nullptr) {
          cache.renders.push_back(rasterize_frozen((*options.frozen_support)[i][b], model, pr, rc));
        } else {
          cache.renders.push_back(rasterize_forward(model, pr, rc));
        }
        cache.render_params.push_back(std::move(pr));
      }
      cache.visualization = visualization_tensor(cache.renders, res);
    }

    std::vector<const Tensor*> parts;
    const Tensor* prev_features = i > 0 ? &out.blocks.back().features : nullptr;
    if (i == 0 || cfg.inputs != BlockInputs::kFeaturesVisualization) parts.push_back(&cache.image);
    if (i > 0 && cfg.inputs != BlockInputs::kImageVisualization) parts.push_back(prev_features);
    parts.push_back(&cache.visualization);
    cache.input = concat_channels(parts);

    Tensor x = cache.input;
    cache.conv_caches.resize(bw.convs.size());
    cache.norm_caches.resize(bw.convs.size());
    for (std::size_t j = 0; j < bw.convs.size(); ++j) {
      Tensor y = bw.convs[j].forward(x, cache.conv_caches[j]);
      y = bw.norms[j].forward(y, options.training, options.update_running_stats,
                              cache.norm_caches[j]);
      y = relu(y);
      cache.activations.push_back(y);
      if (i == 0 && j == 0) y = max_pool2(y, cache.pool_cache);
      x = std::move(y);
    }
    cache.features = std::move(x);

    cache.fc_input = Eigen::Map<const Eigen::MatrixXd>(cache.features.data.data(),
                                                       cache.features.sample_size(), batch);
    cache.hidden = bw.fc1.forward(cache.fc_input).cwiseMax(0.0);
    cache.dropout_mask = Eigen::MatrixXd::Ones(cache.hidden.rows(), batch);
    if (options.training && cfg.dropout > 0.0) {
      std::bernoulli_distribution keep(1.0 - cfg.dropout);
      for (Eigen::Index k = 0; k < cache.dropout_mask.size(); ++k) {
        cache.dropout_mask.data()[k] = keep(dropout_rng) ? 1.0 / (1.0 - cfg.dropout) : 0.0;
      }
    }
    cache.dropped = cache.hidden.cwiseProduct(cache.dropout_mask);
    cache.delta = bw.fc2.forward(cache.dropped);
    cache.delta = weights.output_scale.asDiagonal() * cache.delta;

    std::vector<ParamVector> p_out;
    p_out.reserve(batch);
    for (int b = 0; b < batch; ++b) p_out.push_back(p_in[b] + Eigen::VectorXd(cache.delta.col(b)));
    out.params.push_back(std::move(p_out));
    out.blocks.push_back(std::move(cache));
  }
  return out;
}

BlockLosses block_losses(const ShapeModel& model, const NetworkWeights& weights,
                         const NetworkOutput& output, const std::vector<LossTarget>& targets,
                         const LossWeights& param_weights) {
  const BlockConfig& cfg = weights.config;
  const int batch = output.batch;
  if (static_cast<int>(targets.size()) != batch) {
    throw std::invalid_argument("block_losses: one target per sample needed");
  }
  BlockLosses out;
  for (int i = 0; i < cfg.n_blocks; ++i) {
    const double lambda = cfg.loss_weights[i];
    Eigen::MatrixXd grads(weights.param_dim, batch);
    double sum = 0.0;
    for (int b = 0; b < batch; ++b) {
      const ParamVector& p_in = output.params[i][b];
      const Eigen::VectorXd delta = output.blocks[i].delta.col(b);
      LossResult r;
      if (cfg.loss_kinds[i] == BlockLoss::kParameter) {
        r = param_loss(delta, targets[b].truth.flat() - p_in.flat(), param_weights);
      } else {
        r = landmark_loss(model, p_in, delta, targets[b].landmarks);
      }
      sum += r.loss;
      // Both losses depend on P^i = P^{i-1} + dP^i only, so d/dP^i = d/d(dP^i).
      grads.col(b) = lambda * r.grad / batch;
    }
    out.loss.push_back(sum / batch);
    out.total += lambda * sum / batch;
    out.output_grads.push_back(std::move(grads));
  }
  return out;
}

NetworkGradients network_backward(const ShapeModel& model, const NetworkWeights& weights,
                                  const NetworkOutput& output,
                                  const std::vector<Eigen::MatrixXd>& output_grads,
                                  const BackwardOptions& options) {
  const BlockConfig& cfg = weights.config;
  const int batch = output.batch;
  if (static_cast<int>(output.blocks.size()) != cfg.n_blocks ||
      static_cast<int>(output_grads.size()) != cfg.n_blocks) {
    throw std::invalid_argument("network_backward: forward cache does not match the network");
  }
  const bool training = output.options.training;

  NetworkGradients grads;
  grads.weights = weights.zeros_like();
  grads.images = Tensor(batch, 1, cfg.image_size, cfg.image_size);
  Tensor half_image_grad(batch, 1, cfg.feature_size(), cfg.feature_size());

  Eigen::MatrixXd d_params = Eigen::MatrixXd::Zero(weights.param_dim, batch);
  Tensor d_features_next;  // gradient w.r.t. this block's features from the next block

  for (int i = cfg.n_blocks - 1; i >= 0; --i) {
    const BlockWeights& bw = weights.blocks[i];
    BlockWeights& gw = grads.weights.blocks[i];
    const BlockCache& cache = output.blocks[i];
    if (output_grads[i].rows() != weights.param_dim || output_grads[i].cols() != batch) {
      throw std::invalid_argument("network_backward: output gradient has wrong shape");
    }

    d_params += output_grads[i];
    const Eigen::MatrixXd d_delta = d_params;

    // Fully connected path.
    Eigen::MatrixXd d = weights.output_scale.asDiagonal() * d_delta;
    d = bw.fc2.backward(d, cache.dropped, gw.fc2);
    d = d.cwiseProduct(cache.dropout_mask);
    d = (cache.hidden.array() > 0.0).select(d, 0.0);
    d = bw.fc1.backward(d, cache.fc_input, gw.fc1);

    Tensor dx(batch, cache.features.c, cache.features.h, cache.features.w);
    dx.data = Eigen::Map<const Eigen::VectorXd>(d.data(), d.size());
    if (d_features_next.data.size() > 0) dx.data += d_features_next.data;

    // Convolution stages in reverse.
    for (int j = static_cast<int>(bw.convs.size()) - 1; j >= 0; --j) {
      if (i == 0 && j == 0) dx = max_pool2_backward(dx, cache.pool_cache);
      dx = relu_backward(dx, cache.activations[j]);
      dx = bw.norms[j].backward(dx, cache.norm_caches[j], training, gw.norms[j]);
      dx = bw.convs[j].backward(dx, cache.conv_caches[j], gw.convs[j]);
    }

    // Split the concatenated input gradient.
    std::vector<int> channels;
    const bool has_image = i == 0 || cfg.inputs != BlockInputs::kFeaturesVisualization;
    const bool has_features = i > 0 && cfg.inputs != BlockInputs::kImageVisualization;
    const int prev_c = i > 0 ? output.blocks[i - 1].features.c : 0;
    if (has_image) channels.push_back(1);
    if (has_features) channels.push_back(prev_c);
    channels.push_back(1);
    std::vector<Tensor> parts = split_channels(dx, channels);
    int part = 0;
    if (has_image) {
      Tensor& di = parts[part++];
      if (i == 0) {
        grads.images.data += di.data;
      } else {
        half_image_grad.data += di.data;
      }
    }
    d_features_next = has_features ? parts[part++] : Tensor();
    const Tensor& dv = parts[part];

    // Parameter path into P^{i-1}: identity plus rasterizer.
    Eigen::MatrixXd d_prev = Eigen::MatrixXd::Zero(weights.param_dim, batch);
    if (!options.detach_parameter_path) {
      d_prev = d_params;
      if (!options.detach_visualization && !output.options.constant_visualization) {
        RasterConfig rc = cfg.raster;
        rc.width = rc.height = cache.resolution;
        const bool half = cache.resolution != cfg.image_size;
        for (int b = 0; b < batch; ++b) {
          const Eigen::MatrixXd upstream = Eigen::Map<const RowMajorMatrix>(
              dv.data.data() + b * dv.sample_size(), cache.resolution, cache.resolution);
          Eigen::VectorXd g =
              rasterize_backward(cache.renders[b], upstream, model, cache.render_params[b], rc);
          if (half) g.head(kCameraParams) *= 0.5;
          d_prev.col(b) += g;
        }
      }
    }
    d_params = std::move(d_prev);
  }

  grads.images.data += avg_pool2_backward(half_image_grad, cfg.image_size, cfg.image_size).data;
  grads.initial_params = std::move(d_params);
  return grads;
}

}  // namespace vislayer
