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
#include "vislayer/camera.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "vislayer/visualization_layer.hpp"

namespace vislayer {

CameraMatrix CameraMatrix::frontal(double scale, double tx, double ty) {
  Matrix m;
  m << scale, 0, 0, tx, 0, scale, 0, ty;
  return CameraMatrix(m);
}

CameraMatrix CameraMatrix::from_rotation(const Eigen::Matrix3d& rotation, double scale, double tx,
                                         double ty) {
  Matrix m;
  m.block<2, 3>(0, 0) = scale * rotation.topRows<2>();
  m(0, 3) = tx;
  m(1, 3) = ty;
  return CameraMatrix(m);
}

bool CameraMatrix::is_weak_perspective(double tol) const {
  const Eigen::Vector3d a = row1();
  const Eigen::Vector3d b = row2();
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return false;
  return std::abs(na - nb) <= tol * std::max(na, nb) && std::abs(a.dot(b)) <= tol * na * na;
}

Eigen::VectorXd ParamVector::flat() const {
  Eigen::VectorXd v(size());
  for (int k = 0; k < kCameraParams; ++k) v[k] = camera[k];
  v.tail(shape.size()) = shape;
  return v;
}

ParamVector ParamVector::from_flat(const Eigen::VectorXd& v) {
  if (v.size() < kCameraParams) {
    throw std::invalid_argument("parameter vector needs at least 8 entries");
  }
  ParamVector p;
  for (int k = 0; k < kCameraParams; ++k) p.camera[k] = v[k];
  p.shape = v.tail(v.size() - kCameraParams);
  return p;
}

ParamVector ParamVector::zeros(int num_shape_params) {
  return {CameraMatrix(), Eigen::VectorXd::Zero(num_shape_params)};
}

ParamVector ParamVector::operator+(const Eigen::VectorXd& delta) const {
  if (delta.size() != size()) {
    throw std::invalid_argument("parameter update has " + std::to_string(delta.size()) +
                                " entries, expected " + std::to_string(size()));
  }
  return from_flat(flat() + delta);
}

int LandmarkSet::num_visible() const {
  return static_cast<int>(std::count(visible.begin(), visible.end(), true));
}

double intersection_over_union(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.width, b.x + b.width) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.height, b.y + b.height) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

void check_dimensions(const ShapeModel& model, const ParamVector& params) {
  if (params.shape.size() != model.num_shape_params()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(params.shape.size()) +
                                " shape entries, model expects " +
                                std::to_string(model.num_shape_params()));
  }
}

Eigen::Matrix2Xd project_points(const Eigen::Matrix3Xd& vertices, const CameraMatrix& camera) {
  const auto& m = camera.matrix();
  Eigen::Matrix2Xd out = m.leftCols<3>() * vertices;
  out.colwise() += m.col(3);
  return out;
}

Eigen::Matrix2Xd project_all(const ShapeModel& model, const ParamVector& params) {
  check_dimensions(model, params);
  return project_points(compose_shape(model, params.shape), params.camera);
}

LandmarkSet project_landmarks(const ShapeModel& model, const ParamVector& params) {
  const Eigen::Matrix2Xd all = project_all(model, params);
  const auto& b = model.landmark_indices();
  LandmarkSet out;
  out.points.resize(2, static_cast<Eigen::Index>(b.size()));
  for (std::size_t k = 0; k < b.size(); ++k) out.points.col(static_cast<Eigen::Index>(k)) = all.col(b[k]);
  out.visible.assign(b.size(), true);
  return out;
}

ProjectionJacobian projection_jacobian(const ShapeModel& model, const ParamVector& params,
                                       std::span<const int> vertices) {
  check_dimensions(model, params);
  const Eigen::Matrix3Xd shape = compose_shape(model, params.shape);
  ProjectionJacobian out;
  if (vertices.empty()) {
    out.vertices.resize(model.num_vertices());
    std::iota(out.vertices.begin(), out.vertices.end(), 0);
  } else {
    out.vertices.assign(vertices.begin(), vertices.end());
  }
  const int n = static_cast<int>(out.vertices.size());
  const int np = params.size();
  const Eigen::RowVector3d m1 = params.camera.row1().transpose();
  const Eigen::RowVector3d m2 = params.camera.row2().transpose();
  const Eigen::MatrixXd& basis = model.basis_matrix();

  out.points.resize(2, n);
  out.jacobian = Eigen::MatrixXd::Zero(2 * n, np);
  for (int k = 0; k < n; ++k) {
    const int q = out.vertices[k];
    if (q < 0 || q >= model.num_vertices()) {
      throw std::invalid_argument("projection_jacobian: vertex " + std::to_string(q) +
                                  " out of range");
    }
    const Eigen::Vector3d s = shape.col(q);
    out.points(0, k) = m1.dot(s) + params.camera.tx();
    out.points(1, k) = m2.dot(s) + params.camera.ty();
    out.jacobian.block<1, 3>(2 * k, 0) = s.transpose();
    out.jacobian(2 * k, 3) = 1.0;
    out.jacobian.block<1, 3>(2 * k + 1, 4) = s.transpose();
    out.jacobian(2 * k + 1, 7) = 1.0;
    if (np > kCameraParams) {
      const auto rows = basis.middleRows(3 * q, 3);
      out.jacobian.block(2 * k, kCameraParams, 1, np - kCameraParams) = m1 * rows;
      out.jacobian.block(2 * k + 1, kCameraParams, 1, np - kCameraParams) = m2 * rows;
    }
  }
  return out;
}

std::vector<bool> landmark_visibility(const ShapeModel& model, const ParamVector& params) {
  const Eigen::VectorXd g = frontability(model, params.camera);
  std::vector<bool> out;
  out.reserve(model.landmark_indices().size());
  for (int b : model.landmark_indices()) out.push_back(g[b] > 0.0);
  return out;
}

}  // namespace vislayer
