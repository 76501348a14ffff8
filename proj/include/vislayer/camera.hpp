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

#include "vislayer/morphable_model.hpp"

namespace vislayer {

inline constexpr int kCameraParams = 8;

// 2x4 weak-perspective camera
//   [m1 m2 m3 m4]
//   [m5 m6 m7 m8]
// Flat index k (0..7) addresses m_{k+1} in row-major order. No orthogonality
// is enforced: network updates are unconstrained.
class CameraMatrix {
 public:
  using Matrix = Eigen::Matrix<double, 2, 4, Eigen::RowMajor>;

  CameraMatrix() : m_(Matrix::Zero()) {}
  explicit CameraMatrix(const Matrix& m) : m_(m) {}

  // m1 = [s 0 0], m2 = [0 s 0].
  static CameraMatrix frontal(double scale, double tx, double ty);
  // Rows of s*R for a rotation R, plus translation.
  static CameraMatrix from_rotation(const Eigen::Matrix3d& rotation, double scale, double tx,
                                    double ty);

  double operator[](int k) const { return m_.data()[k]; }
  double& operator[](int k) { return m_.data()[k]; }

  Eigen::Vector3d row1() const { return m_.block<1, 3>(0, 0).transpose(); }
  Eigen::Vector3d row2() const { return m_.block<1, 3>(1, 0).transpose(); }
  double tx() const { return m_(0, 3); }
  double ty() const { return m_(1, 3); }
  const Matrix& matrix() const { return m_; }

  bool is_finite() const { return m_.allFinite(); }
  // |m1| == |m2| (relative tol) and m1.m2 == 0 (tol * |m1|^2).
  bool is_weak_perspective(double tol = 1e-6) const;

 private:
  Matrix m_;
};

// P = {M, p}. Canonical flat layout: [m1..m8, p_identity, p_expression].
struct ParamVector {
  CameraMatrix camera;
  Eigen::VectorXd shape;

  int size() const { return kCameraParams + static_cast<int>(shape.size()); }
  Eigen::VectorXd flat() const;
  static ParamVector from_flat(const Eigen::VectorXd& v);
  static ParamVector zeros(int num_shape_params);

  ParamVector operator+(const Eigen::VectorXd& delta) const;
};

struct LandmarkSet {
  Eigen::Matrix2Xd points;
  std::vector<bool> visible;

  int size() const { return static_cast<int>(points.cols()); }
  int num_visible() const;
};

// Axis-aligned box in pixel coordinates.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  double center_x() const { return x + 0.5 * width; }
  double center_y() const { return y + 0.5 * height; }
  double area() const { return width * height; }
};

double intersection_over_union(const BoundingBox& a, const BoundingBox& b);

// Column q = M [S(:, q); 1].
Eigen::Matrix2Xd project_points(const Eigen::Matrix3Xd& vertices, const CameraMatrix& camera);
Eigen::Matrix2Xd project_all(const ShapeModel& model, const ParamVector& params);

// f(P): projections of the landmark vertices. Visibility flags are all set;
// use landmark_visibility for the frontability-based flags.
LandmarkSet project_landmarks(const ShapeModel& model, const ParamVector& params);

// Derivatives of projected coordinates w.r.t. the flat parameter vector.
// Row 2k is x of the k-th requested vertex, row 2k + 1 its y.
struct ProjectionJacobian {
  std::vector<int> vertices;
  Eigen::Matrix2Xd points;
  Eigen::MatrixXd jacobian;
};

// Empty `vertices` means every model vertex.
ProjectionJacobian projection_jacobian(const ShapeModel& model, const ParamVector& params,
                                       std::span<const int> vertices = {});

// Landmark k is visible iff frontability(b_k) > 0.
std::vector<bool> landmark_visibility(const ShapeModel& model, const ParamVector& params);

void check_dimensions(const ShapeModel& model, const ParamVector& params);

}  // namespace vislayer
