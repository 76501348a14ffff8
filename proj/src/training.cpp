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
#include "vislayer/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "vislayer/config_json.hpp"
#include "vislayer/file_util.hpp"
#include "vislayer/fitting.hpp"

namespace vislayer {

namespace {

std::vector<ParamVector> initial_params(const std::vector<FaceSample>& samples,
                                        std::span<const int> indices) {
  std::vector<ParamVector> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(samples[i].initial);
  return out;
}

std::string join(const std::vector<double>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? ", " : "") << values[i];
  return out.str();
}

}  // namespace

Eigen::VectorXd update_scale(const std::vector<FaceSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("update_scale: no samples");
  const Eigen::Index dim = samples[0].truth.size();
  Eigen::MatrixXd diffs(dim, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    diffs.col(static_cast<Eigen::Index>(i)) = samples[i].truth.flat() - samples[i].initial.flat();
  }
  const Eigen::VectorXd mean = diffs.rowwise().mean();
  Eigen::VectorXd scale =
      ((diffs.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
  const double floor = std::max(1e-6 * scale.maxCoeff(), 1e-12);
  return scale.cwiseMax(floor);
}

EvalResult evaluate(const ShapeModel& model, NetworkWeights& weights,
                    const std::vector<FaceSample>& samples, int batch_size,
                    bool constant_visualization) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
  const int stages = weights.config.n_blocks + 1;
  EvalResult result;
  result.nme.assign(stages, 0.0);
  result.mape.assign(stages, 0.0);
  ForwardOptions options;
  options.constant_visualization = constant_visualization;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<int> idx(std::min<std::size_t>(batch_size, samples.size() - start));
    std::iota(idx.begin(), idx.end(), static_cast<int>(start));
    const NetworkOutput out = network_forward(model, weights, batch_images(samples, idx),
                                              initial_params(samples, idx), options);
    for (int s = 0; s < stages; ++s) {
      for (std::size_t b = 0; b < idx.size(); ++b) {
        const FaceSample& f = samples[idx[b]];
        const LandmarkSet est = project_landmarks(model, out.params[s][b]);
        result.nme[s] += nme(est, f.landmarks, f.bbox);
        result.mape[s] += mape(est, f.landmarks);
      }
    }
  }
  for (int s = 0; s < stages; ++s) {
    result.nme[s] /= static_cast<double>(samples.size());
    result.mape[s] /= static_cast<double>(samples.size());
  }
  return result;
}

namespace {

// Integer translation of one sample; uncovered pixels become 0.
void shift_sample(Tensor& images, int sample, int dx, int dy) {
  Tensor one(1, images.c, images.h, images.w);
  for (int c = 0; c < images.c; ++c) {
    for (int y = 0; y < images.h; ++y) {
      for (int x = 0; x < images.w; ++x) {
        const int sy = y - dy;
        const int sx = x - dx;
        if (sy >= 0 && sy < images.h && sx >= 0 && sx < images.w) {
          one.at(0, c, y, x) = images.at(sample, c, sy, sx);
        }
      }
    }
  }
  images.sample(sample) = one.sample(0);
}

}  // namespace

TrainResult train_toy(const ShapeModel& model, const BlockConfig& config,
                      const std::vector<FaceSample>& train,
                      const std::vector<FaceSample>& validation, const TrainOptions& options,
                      const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (train.empty() || validation.empty()) {
    throw std::invalid_argument("train_toy: training and validation sets must be non-empty");
  }
  if (options.epochs < 0 || options.batch_size < 1) {
    throw std::invalid_argument("train_toy: epochs must be >= 0 and batch_size >= 1");
  }
  if (!(options.learning_rate > 0.0) || options.momentum < 0.0 || options.momentum >= 1.0 ||
      options.weight_decay < 0.0) {
    throw std::invalid_argument("train_toy: invalid optimiser settings");
  }
  const int dim = kCameraParams + model.num_shape_params();

  TrainResult result;
  result.weights = NetworkWeights::create(config, dim, options.seed);
  if (result.weights.config.image_size != train[0].image.rows()) {
    throw std::invalid_argument("train_toy: dataset image size differs from network image_size");
  }
  result.weights.output_scale = update_scale(train);
  std::vector<ParamVector> truths;
  for (const FaceSample& s : train) truths.push_back(s.truth);
  result.loss_weights = build_weights(model, truths);
  result.initial_validation = evaluate(model, result.weights, validation, options.eval_batch,
                                       options.constant_visualization);

  NetworkWeights velocity = result.weights.zeros_like();
  std::vector<Eigen::Map<Eigen::VectorXd>> params;
  std::vector<Eigen::Map<Eigen::VectorXd>> moments;
  result.weights.for_each_trainable(
      [&](const std::string&, std::vector<int>, Eigen::Map<Eigen::VectorXd> v) {
        params.push_back(v);
      });
  velocity.for_each_trainable(
      [&](const std::string&, std::vector<int>, Eigen::Map<Eigen::VectorXd> v) {
        moments.push_back(v);
      });

  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  double lr = options.learning_rate;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss.assign(config.n_blocks, 0.0);
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
      ForwardOptions fwd;
      fwd.training = true;
      fwd.update_running_stats = true;
      fwd.dropout_seed = rng();
      fwd.constant_visualization = options.constant_visualization;
      Tensor images = batch_images(train, idx);
      std::vector<LossTarget> targets;
      std::vector<BoundingBox> boxes;
      for (int i : idx) {
        targets.push_back({train[i].truth, train[i].landmarks});
        boxes.push_back(train[i].bbox);
      }
      if (options.max_shift > 0) {
        std::uniform_int_distribution<int> shift(-options.max_shift, options.max_shift);
        for (std::size_t b = 0; b < idx.size(); ++b) {
          const int dx = shift(rng);
          const int dy = shift(rng);
          shift_sample(images, static_cast<int>(b), dx, dy);
          targets[b].truth.camera[3] += dx;
          targets[b].truth.camera[7] += dy;
          targets[b].landmarks.points.colwise() += Eigen::Vector2d(dx, dy);
          boxes[b].x += dx;
          boxes[b].y += dy;
        }
      }
      std::vector<ParamVector> initial;
      for (const BoundingBox& box : boxes) {
        initial.push_back(initialize_params(
            options.jitter_initialization ? jitter_bbox(box, rng(), 1)[0] : box, model));
      }
      const NetworkOutput out = network_forward(model, result.weights, images, initial, fwd);
      const BlockLosses losses =
          block_losses(model, result.weights, out, targets, result.loss_weights);
      if (!std::isfinite(losses.total)) {
        throw TrainingError("train_toy: non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches) + " (block losses: " +
                            join(losses.loss) + ", learning rate " + std::to_string(lr) + ")");
      }
      const NetworkGradients grads =
          network_backward(model, result.weights, out, losses.output_grads, options.backward);

      std::vector<Eigen::Map<Eigen::VectorXd>> g;
      NetworkWeights gw = grads.weights;
      gw.for_each_trainable([&](const std::string&, std::vector<int>,
                                Eigen::Map<Eigen::VectorXd> v) { g.push_back(v); });
      double clip = 1.0;
      if (options.grad_clip > 0.0) {
        double norm2 = 0.0;
        for (const auto& v : g) norm2 += v.squaredNorm();
        const double norm = std::sqrt(norm2);
        if (norm > options.grad_clip) clip = options.grad_clip / norm;
      }
      for (std::size_t t = 0; t < params.size(); ++t) {
        moments[t] = options.momentum * moments[t] -
                     lr * (clip * g[t] + options.weight_decay * params[t]);
        params[t] += moments[t];
      }

      for (int b = 0; b < config.n_blocks; ++b) metrics.train_loss[b] += losses.loss[b];
      metrics.train_total += losses.total;
      ++batches;
    }
    for (double& l : metrics.train_loss) l /= batches;
    metrics.train_total /= batches;
    metrics.validation = evaluate(model, result.weights, validation, options.eval_batch,
                                  options.constant_visualization);
    for (double v : metrics.validation.nme) {
      if (!std::isfinite(v)) {
        throw TrainingError("train_toy: validation NME became non-finite at epoch " +
                            std::to_string(epoch));
      }
    }
    if (on_epoch) on_epoch(metrics);
    result.history.push_back(std::move(metrics));
    lr *= options.lr_decay;
  }
  return result;
}

std::string checkpoint_to_json(NetworkWeights& weights) {
  Json doc;
  doc["format"] = "vislayer-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["param_dim"] = weights.param_dim;
  doc["config"] = to_json(weights.config);
  auto dump = [](NetworkWeights& w, bool trainable) {
    Json list = Json::array();
    auto visit = [&](const std::string& name, std::vector<int> shape,
                     Eigen::Map<Eigen::VectorXd> v) {
      list.push_back({{"name", name},
                      {"shape", shape},
                      {"values", std::vector<double>(v.data(), v.data() + v.size())}});
    };
    if (trainable) {
      w.for_each_trainable(visit);
    } else {
      w.for_each_state(visit);
    }
    return list;
  };
  doc["tensors"] = dump(weights, true);
  doc["state"] = dump(weights, false);
  return doc.dump() + "\n";
}

NetworkWeights checkpoint_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("checkpoint: parse error: ") + e.what());
  }
  for (const char* key : {"format", "version", "param_dim", "config", "tensors", "state"}) {
    if (!doc.contains(key)) throw ConfigError(std::string("checkpoint: missing key '") + key + "'");
  }
  if (doc["format"] != "vislayer-checkpoint") throw ConfigError("checkpoint: unknown format");
  if (doc["version"].get<int>() != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported version " + doc["version"].dump());
  }
  BlockConfig config;
  update_from_json(doc["config"], config, "checkpoint.config");
  NetworkWeights weights =
      NetworkWeights::create(config, doc["param_dim"].get<int>(), 0, true);
  auto load = [](const Json& list, NetworkWeights& w, bool trainable) {
    std::size_t i = 0;
    auto visit = [&](const std::string& name, std::vector<int> shape,
                     Eigen::Map<Eigen::VectorXd> v) {
      if (i >= list.size()) throw ConfigError("checkpoint: missing tensor '" + name + "'");
      const Json& entry = list[i++];
      if (entry.at("name").get<std::string>() != name ||
          entry.at("shape").get<std::vector<int>>() != shape) {
        throw ConfigError("checkpoint: tensor '" + name + "' has wrong name or shape");
      }
      const std::vector<double> values = entry.at("values").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(values.size()) != v.size()) {
        throw ConfigError("checkpoint: tensor '" + name + "' has wrong size");
      }
      v = Eigen::Map<const Eigen::VectorXd>(values.data(), v.size());
    };
    if (trainable) {
      w.for_each_trainable(visit);
    } else {
      w.for_each_state(visit);
    }
    if (i != list.size()) throw ConfigError("checkpoint: unexpected extra tensors");
  };
  try {
    load(doc["tensors"], weights, true);
    load(doc["state"], weights, false);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed tensor entry: ") + e.what());
  }
  return weights;
}

void save_checkpoint(NetworkWeights& weights, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_to_json(weights));
}

NetworkWeights load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_json(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace vislayer
