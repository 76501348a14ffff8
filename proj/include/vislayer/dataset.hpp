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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vislayer/camera.hpp"
#include "vislayer/morphable_model.hpp"
#include "vislayer/tensor_ops.hpp"
#include "vislayer/visualization_layer.hpp"

namespace vislayer {

struct FaceSample {
  Eigen::MatrixXd image;  // image_size x image_size
  ParamVector truth;
  LandmarkSet landmarks;  // f(truth) with frontability-based visibility
  BoundingBox bbox;       // tight box around all projected vertices
  ParamVector initial;    // initialize_params(bbox)
};

struct DatasetOptions {
  std::uint64_t seed = 1;
  int count = 200;
  int image_size = 64;
  double max_yaw_deg = 90.0;
  double max_pitch_deg = 15.0;
  double max_roll_deg = 45.0;
  // Camera scale as a fraction of image_size (model units to pixels).
  double scale_fraction = 0.28;
  double scale_jitter = 0.1;     // relative, uniform
  double center_jitter = 0.05;   // fraction of image_size, uniform
  // Shape coefficients are shape_sigma * stddev_k * z with z ~ N(0, 1)
  // truncated to [-2, 2].
  double shape_sigma = 1.0;
  // Poses with fewer visible landmarks are redrawn.
  int min_visible_landmarks = 4;
  // Rendering used as the input photograph. The mask is fixed to "none" so
  // the photograph does not depend on the network's mask choice.
  RasterConfig photo{.sigma = 1.0, .support_radius = 2, .background_value = 0.0,
                     .mask = MaskKind::kNone};
};

// Random poses and shapes rendered by the visualization layer. Deterministic
// per seed.
std::vector<FaceSample> generate_synthetic_dataset(const ShapeModel& model,
                                                   const DatasetOptions& options);

// Stacks the images of the selected samples into a B x 1 x S x S tensor.
Tensor batch_images(const std::vector<FaceSample>& samples, std::span<const int> indices);

// Tight box around the projections of all model vertices.
BoundingBox projected_bbox(const ShapeModel& model, const ParamVector& params);

}  // namespace vislayer
