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
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vislayer/camera.hpp"
#include "vislayer/morphable_model.hpp"
#include "vislayer/visualization_layer.hpp"

namespace vislayer {

// |a - n| / max(|a|, |n|, floor_fraction * max_j |a_j|). The floor keeps
// entries that are zero up to round-off from dominating the maximum.
struct RelativeError {
  double max_error = 0.0;
  int worst_index = -1;
};
RelativeError relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                             double floor_fraction = 1e-6);

// Central differences of a scalar function along each coordinate, with step
// rel_step * max(1, |x_j|).
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double rel_step);

struct GradcheckOptions {
  std::uint64_t seed = 1;
  int trials = 20;
  int image_size = 32;
  int model_vertices = 150;
  int num_identity = 4;
  int num_expression = 3;
  int network_weights = 50;  // sampled weights for the end-to-end check
  double rasterizer_threshold = 1e-4;
  double smooth_threshold = 1e-6;
  double network_threshold = 1e-3;
};

struct CategoryReport {
  std::string name;
  double max_error = 0.0;
  double threshold = 0.0;
  int worst_trial = -1;
  int worst_index = -1;        // flat parameter index or sampled weight index
  std::string worst_label;     // e.g. "m4", "p3", "block0.fc1.weight[12]"
  int trials = 0;
  int resampled = 0;           // configurations rejected because a probe flipped a decision
  bool passed() const { return max_error <= threshold; }
};

// Random camera (rotation plus small shear), shape within +-2 stddev, face
// roughly centred in a `size` x `size` image.
ParamVector random_params(const ShapeModel& model, int size, std::mt19937_64& rng);

CategoryReport check_rasterizer(const GradcheckOptions& options);
CategoryReport check_projection_jacobian(const GradcheckOptions& options);
CategoryReport check_landmark_loss(const GradcheckOptions& options);
// Two blocks, 8x8 images, Q = 60 model.
CategoryReport check_network(const GradcheckOptions& options);

std::vector<CategoryReport> run_gradchecks(const GradcheckOptions& options);

// "m1".."m8" for camera entries, "p<j>" for shape entries.
std::string param_label(int index);

}  // namespace vislayer
