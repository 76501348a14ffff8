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

#include <span>
#include <vector>

#include <Eigen/Core>

#include "vislayer/camera.hpp"
#include "vislayer/morphable_model.hpp"

namespace vislayer {

// Diagonal of W for the parameter loss, in the flat parameter layout.
// Scaled-rotation entries get 1/r, translations 1, shape entries 1/stddev.
struct LossWeights {
  Eigen::VectorXd diagonal;
  double ratio = 1.0;  // r: mean |rotation entry| / mean |translation|
};

LossWeights build_weights(const ShapeModel& model, std::span<const ParamVector> training_params);

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// e^T W e with e = delta - target; grad = 2 W e.
LossResult param_loss(const Eigen::VectorXd& delta, const Eigen::VectorXd& target,
                      const LossWeights& weights);

// |f(P + dP) - U|^2 summed over the landmarks flagged visible in U (all of
// them when U has no flags); gradient w.r.t. dP.
LossResult landmark_loss(const ShapeModel& model, const ParamVector& params,
                         const Eigen::VectorXd& delta, const LandmarkSet& target);

// Mean visible-landmark error over sqrt(bbox area), in percent. Visibility is
// taken from `truth`. Throws when no landmark is visible.
double nme(const LandmarkSet& estimated, const LandmarkSet& truth, const BoundingBox& bbox);

// Mean visible-landmark error in pixels.
double mape(const LandmarkSet& estimated, const LandmarkSet& truth);

}  // namespace vislayer
