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
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vislayer/dataset.hpp"
#include "vislayer/losses.hpp"
#include "vislayer/network.hpp"

namespace vislayer {

struct TrainOptions {
  int epochs = 30;
  int batch_size = 5;
  double learning_rate = 1e-5;
  double lr_decay = 0.93;  // multiplier applied after every epoch
  double momentum = 0.9;
  double weight_decay = 0.005;
  double grad_clip = 0.0;  // max global gradient norm; 0 disables clipping
  std::uint64_t seed = 1;
  BackwardOptions backward;
  bool constant_visualization = false;
  // Redraw each training face's P0 from a jittered bounding box every epoch.
  bool jitter_initialization = true;
  // Random integer translation of each training image (and its targets) by
  // up to this many pixels per axis; 0 disables.
  int max_shift = 2;
  int eval_batch = 50;
};

// Index 0 is the initial estimate P0, index i the output of block i.
struct EvalResult {
  std::vector<double> nme;
  std::vector<double> mape;
};

struct EpochMetrics {
  int epoch = 0;
  std::vector<double> train_loss;  // per block, mean over batches, unweighted
  double train_total = 0.0;
  EvalResult validation;
};

struct TrainResult {
  NetworkWeights weights;
  LossWeights loss_weights;
  EvalResult initial_validation;
  std::vector<EpochMetrics> history;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-parameter standard deviation of (P* - P0) over the samples, floored at
// 1e-6 of the largest entry. Used as the fixed scale of the emitted update.
Eigen::VectorXd update_scale(const std::vector<FaceSample>& samples);

// Inference-mode forward over `samples`; mean NME/MAPE per stage.
EvalResult evaluate(const ShapeModel& model, NetworkWeights& weights,
                    const std::vector<FaceSample>& samples, int batch_size = 50,
                    bool constant_visualization = false);

// SGD with momentum and weight decay on the block-weighted losses.
TrainResult train_toy(const ShapeModel& model, const BlockConfig& config,
                      const std::vector<FaceSample>& train,
                      const std::vector<FaceSample>& validation, const TrainOptions& options,
                      const std::function<void(const EpochMetrics&)>& on_epoch = {});

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(NetworkWeights& weights);
NetworkWeights checkpoint_from_json(const std::string& text);
void save_checkpoint(NetworkWeights& weights, const std::filesystem::path& path);
NetworkWeights load_checkpoint(const std::filesystem::path& path);

}  // namespace vislayer
