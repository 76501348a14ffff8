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
#include <stdexcept>
#include <string>
#include <vector>

#include "vislayer/camera.hpp"
#include "vislayer/morphable_model.hpp"

namespace vislayer {

struct FitOptions {
  int max_iters = 300;
  // Stop when |loss_{k-1} - loss_k| <= tol * (1 + loss_k).
  double tol = 1e-12;
  // Gradient steps on p between two closed-form camera solves.
  int shape_steps = 4;
  // Optional Tikhonov weight on p, applied as lambda * sum (p_j / stddev_j)^2.
  double shape_regularization = 0.0;
};

struct FitResult {
  ParamVector params;
  double nme = 0.0;   // percent, over visible target landmarks
  double loss = 0.0;  // objective at `params`
  int iterations = 0;
  // Objective after each accepted update, starting with the initial value.
  std::vector<double> loss_history;
};

// Raised when the objective stops being finite.
class FitDivergedError : public std::runtime_error {
 public:
  FitDivergedError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

// Frontal camera whose mean-shape x-extent spans 0.9 x bbox width, mean-shape
// centroid on the bbox centre, p = 0.
ParamVector initialize_params(const BoundingBox& bbox, const ShapeModel& model);

// Minimises the squared reprojection error of the visible target landmarks by
// alternating a least-squares camera solve with line-searched gradient steps
// on p. Needs at least 4 visible landmarks.
FitResult fit_landmarks(const ShapeModel& model, const LandmarkSet& target, const BoundingBox& bbox,
                        const FitOptions& options = {});

struct JitterOptions {
  double offset_fraction = 0.1;  // centre offset, fraction of width/height
  double min_scale = 0.9;
  double max_scale = 1.1;
};

std::vector<BoundingBox> jitter_bbox(const BoundingBox& bbox, std::uint64_t seed, int count = 20,
                                     const JitterOptions& options = {});

}  // namespace vislayer
