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
#include "vislayer/fitting.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "vislayer/losses.hpp"

namespace vislayer {

namespace {

// Residuals and Jacobian of the visible landmarks, plus the regulariser.
class FitObjective {
 public:
  FitObjective(const ShapeModel& model, const LandmarkSet& target, double regularization)
      : model_(model), regularization_(regularization) {
    for (int k = 0; k < target.size(); ++k) {
      if (!target.visible[k]) continue;
      vertices_.push_back(model.landmark_indices()[k]);
      targets_.push_back(target.points.col(k));
    }
    const Eigen::VectorXd stddev = model.basis_stddev();
    prior_ = Eigen::VectorXd::Zero(stddev.size());
    if (regularization_ > 0.0) {
      for (Eigen::Index j = 0; j < stddev.size(); ++j) {
        if (!(stddev[j] > 0.0)) {
          throw std::invalid_argument("shape regularisation needs positive basis stddevs");
        }
        prior_[j] = regularization_ / (stddev[j] * stddev[j]);
      }
    }
  }

  int num_points() const { return static_cast<int>(vertices_.size()); }

  double value(const ParamVector& p) const {
    const Eigen::Matrix2Xd pts = project_points(compose_shape(model_, p.shape), p.camera);
    double loss = 0.0;
    for (int k = 0; k < num_points(); ++k) {
      loss += (pts.col(vertices_[k]) - targets_[k]).squaredNorm();
    }
    return loss + p.shape.dot(prior_.cwiseProduct(p.shape));
  }

  // Least-squares camera for the current shape (the projection is linear in M).
  CameraMatrix solve_camera(const Eigen::VectorXd& shape_params) const {
    const Eigen::Matrix3Xd shape = compose_shape(model_, shape_params);
    Eigen::MatrixXd design(num_points(), 4);
    Eigen::MatrixXd rhs(num_points(), 2);
    for (int k = 0; k < num_points(); ++k) {
      design.block<1, 3>(k, 0) = shape.col(vertices_[k]).transpose();
      design(k, 3) = 1.0;
      rhs.row(k) = targets_[k].transpose();
    }
    const Eigen::MatrixXd sol = design.completeOrthogonalDecomposition().solve(rhs);
    CameraMatrix::Matrix m;
    m.row(0) = sol.col(0).transpose();
    m.row(1) = sol.col(1).transpose();
    return CameraMatrix(m);
  }

  // Gradient of the objective w.r.t. p and the shape Jacobian (2K x N).
  void shape_gradient(const ParamVector& p, Eigen::VectorXd& grad, Eigen::MatrixXd& jac) const {
    const ProjectionJacobian pj = projection_jacobian(model_, p, vertices_);
    const int n = model_.num_shape_params();
    jac = pj.jacobian.rightCols(n);
    Eigen::VectorXd r(2 * num_points());
    for (int k = 0; k < num_points(); ++k) r.segment<2>(2 * k) = pj.points.col(k) - targets_[k];
    grad = 2.0 * jac.transpose() * r + 2.0 * prior_.cwiseProduct(p.shape);
  }

  // Second directional derivative along d (the objective is quadratic in p).
  double curvature(const Eigen::MatrixXd& jac, const Eigen::VectorXd& d) const {
    return 2.0 * ((jac * d).squaredNorm() + d.dot(prior_.cwiseProduct(d)));
  }

 private:
  const ShapeModel& model_;
  double regularization_;
  std::vector<int> vertices_;
  std::vector<Eigen::Vector2d> targets_;
  Eigen::VectorXd prior_;
};

}  // namespace

ParamVector initialize_params(const BoundingBox& bbox, const ShapeModel& model) {
  if (!(bbox.width > 0.0) || !(bbox.height > 0.0) || !std::isfinite(bbox.x) ||
      !std::isfinite(bbox.y)) {
    throw std::invalid_argument("initialize_params: degenerate bounding box");
  }
  const Eigen::Matrix3Xd& mean = model.mean_shape();
  const double extent = mean.row(0).maxCoeff() - mean.row(0).minCoeff();
  if (!(extent > 0.0)) throw std::invalid_argument("initialize_params: mean shape has no width");
  const double s = 0.9 * bbox.width / extent;
  const Eigen::Vector3d centroid = mean.rowwise().mean();
  return {CameraMatrix::frontal(s, bbox.center_x() - s * centroid.x(),
                                bbox.center_y() - s * centroid.y()),
          Eigen::VectorXd::Zero(model.num_shape_params())};
}

FitResult fit_landmarks(const ShapeModel& model, const LandmarkSet& target, const BoundingBox& bbox,
                        const FitOptions& options) {
  if (target.size() != model.num_landmarks() ||
      static_cast<int>(target.visible.size()) != target.size()) {
    throw std::invalid_argument("fit_landmarks: target does not match the model's landmarks");
  }
  if (target.num_visible() < 4) {
    throw std::invalid_argument("fit_landmarks: need at least 4 visible landmarks, got " +
                                std::to_string(target.num_visible()));
  }
  const FitObjective objective(model, target, options.shape_regularization);

  ParamVector current = initialize_params(bbox, model);
  FitResult result;
  double loss = objective.value(current);
  result.loss_history.push_back(loss);
  result.params = current;
  result.loss = loss;

  auto accept = [&](const ParamVector& candidate, double value, int iter) {
    if (!std::isfinite(value)) {
      throw FitDivergedError("fit_landmarks: objective became non-finite at iteration " +
                                 std::to_string(iter),
                             iter);
    }
    current = candidate;
    loss = value;
    result.loss_history.push_back(loss);
    if (loss < result.loss) {
      result.loss = loss;
      result.params = current;
    }
  };

  int iter = 0;
  for (; iter < options.max_iters; ++iter) {
    const double start = loss;

    ParamVector with_camera{objective.solve_camera(current.shape), current.shape};
    const double camera_value = objective.value(with_camera);
    // The solve is a global minimiser in M; guard against round-off increases.
    if (camera_value <= loss || !std::isfinite(camera_value)) accept(with_camera, camera_value, iter);

    for (int step = 0; step < options.shape_steps && model.num_shape_params() > 0; ++step) {
      Eigen::VectorXd grad;
      Eigen::MatrixXd jac;
      objective.shape_gradient(current, grad, jac);
      const double gg = grad.squaredNorm();
      if (gg == 0.0) break;
      const double curv = objective.curvature(jac, grad);
      double t = curv > 0.0 ? gg / curv : 1.0;
      // Armijo backtracking from the exact quadratic step.
      bool moved = false;
      for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
        ParamVector candidate{current.camera, current.shape - t * grad};
        const double value = objective.value(candidate);
        if (!std::isfinite(value)) {
          throw FitDivergedError("fit_landmarks: objective became non-finite at iteration " +
                                     std::to_string(iter),
                                 iter);
        }
        if (value <= loss - 1e-4 * t * gg) {
          accept(candidate, value, iter);
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }

    if (std::abs(start - loss) <= options.tol * (1.0 + loss)) {
      ++iter;
      break;
    }
  }
  result.iterations = iter;
  result.nme = nme(project_landmarks(model, result.params), target, bbox);
  return result;
}

std::vector<BoundingBox> jitter_bbox(const BoundingBox& bbox, std::uint64_t seed, int count,
                                     const JitterOptions& options) {
  if (count < 1) throw std::invalid_argument("jitter_bbox: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(-options.offset_fraction, options.offset_fraction);
  std::uniform_real_distribution<double> scale(options.min_scale, options.max_scale);
  std::vector<BoundingBox> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double cx = bbox.center_x() + offset(rng) * bbox.width;
    const double cy = bbox.center_y() + offset(rng) * bbox.height;
    const double w = bbox.width * scale(rng);
    const double h = bbox.height * scale(rng);
    out.push_back({cx - 0.5 * w, cy - 0.5 * h, w, h});
  }
  return out;
}

}  // namespace vislayer
