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
#include "vislayer/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vislayer {

namespace {

constexpr int kRotationEntries[] = {0, 1, 2, 4, 5, 6};
constexpr int kTranslationEntries[] = {3, 7};

double mean_visible_error(const LandmarkSet& estimated, const LandmarkSet& truth) {
  if (estimated.size() != truth.size()) {
    throw std::invalid_argument("landmark sets differ in size");
  }
  if (static_cast<int>(truth.visible.size()) != truth.size()) {
    throw std::invalid_argument("ground-truth landmarks carry no visibility flags");
  }
  double total = 0.0;
  int count = 0;
  for (int k = 0; k < truth.size(); ++k) {
    if (!truth.visible[k]) continue;
    total += (estimated.points.col(k) - truth.points.col(k)).norm();
    ++count;
  }
  if (count == 0) throw std::invalid_argument("no visible landmarks to evaluate");
  return total / count;
}

}  // namespace

LossWeights build_weights(const ShapeModel& model, std::span<const ParamVector> training_params) {
  if (training_params.empty()) throw std::invalid_argument("build_weights: empty training set");
  double rot = 0.0;
  double trans = 0.0;
  for (const ParamVector& p : training_params) {
    check_dimensions(model, p);
    for (int k : kRotationEntries) rot += std::abs(p.camera[k]);
    for (int k : kTranslationEntries) trans += std::abs(p.camera[k]);
  }
  const double n = static_cast<double>(training_params.size());
  rot /= 6.0 * n;
  trans /= 2.0 * n;
  if (!(trans > 0.0)) throw std::invalid_argument("build_weights: mean translation is zero");
  if (!(rot > 0.0)) throw std::invalid_argument("build_weights: mean rotation entry is zero");

  LossWeights w;
  w.ratio = rot / trans;
  w.diagonal.resize(kCameraParams + model.num_shape_params());
  for (int k : kRotationEntries) w.diagonal[k] = 1.0 / w.ratio;
  for (int k : kTranslationEntries) w.diagonal[k] = 1.0;
  const Eigen::VectorXd stddev = model.basis_stddev();
  for (Eigen::Index j = 0; j < stddev.size(); ++j) {
    if (!(stddev[j] > 0.0)) {
      throw std::invalid_argument("build_weights: basis " + std::to_string(j) +
                                  " has zero standard deviation");
    }
    w.diagonal[kCameraParams + j] = 1.0 / stddev[j];
  }
  return w;
}

LossResult param_loss(const Eigen::VectorXd& delta, const Eigen::VectorXd& target,
                      const LossWeights& weights) {
  if (delta.size() != target.size() || delta.size() != weights.diagonal.size()) {
    throw std::invalid_argument("param_loss: dimension mismatch");
  }
  const Eigen::VectorXd e = delta - target;
  const Eigen::VectorXd we = weights.diagonal.cwiseProduct(e);
  return {e.dot(we), 2.0 * we};
}

LossResult landmark_loss(const ShapeModel& model, const ParamVector& params,
                         const Eigen::VectorXd& delta, const LandmarkSet& target) {
  if (target.size() != model.num_landmarks()) {
    throw std::invalid_argument("landmark_loss: target has " + std::to_string(target.size()) +
                                " landmarks, model has " + std::to_string(model.num_landmarks()));
  }
  const ParamVector updated = params + delta;
  const ProjectionJacobian pj = projection_jacobian(model, updated, model.landmark_indices());
  if (!target.visible.empty() && static_cast<int>(target.visible.size()) != target.size()) {
    throw std::invalid_argument("landmark_loss: visibility flags do not match the landmarks");
  }
  Eigen::Matrix2Xd residual = pj.points - target.points;
  for (std::size_t k = 0; k < target.visible.size(); ++k) {
    if (!target.visible[k]) residual.col(static_cast<Eigen::Index>(k)).setZero();
  }
  const Eigen::Map<const Eigen::VectorXd> r(residual.data(), residual.size());
  return {r.squaredNorm(), 2.0 * pj.jacobian.transpose() * r};
}

double nme(const LandmarkSet& estimated, const LandmarkSet& truth, const BoundingBox& bbox) {
  if (!(bbox.width > 0.0) || !(bbox.height > 0.0)) {
    throw std::invalid_argument("nme: bounding box must have positive size");
  }
  return 100.0 * mean_visible_error(estimated, truth) / std::sqrt(bbox.area());
}

double mape(const LandmarkSet& estimated, const LandmarkSet& truth) {
  return mean_visible_error(estimated, truth);
}

}  // namespace vislayer
