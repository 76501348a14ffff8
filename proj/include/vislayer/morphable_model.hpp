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

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace vislayer {

using Triangle = std::array<int, 3>;

// Per-vertex weighting applied to the frontability values when rendering.
enum class MaskKind {
  kNoseTip,    // single Gaussian centred on the nose tip
  kFivePoint,  // eyes, nose tip and lip corners
  kNone,       // constant 1
};

// Raw fields of a linear face model. Everything the model file stores lives
// here; derived quantities (normals, masks) are computed by ShapeModel.
struct ShapeModelData {
  Eigen::Matrix3Xd mean_shape;
  std::vector<Eigen::Matrix3Xd> identity_bases;
  std::vector<Eigen::Matrix3Xd> expression_bases;
  Eigen::VectorXd identity_stddev;
  Eigen::VectorXd expression_stddev;
  std::vector<Triangle> triangles;
  std::vector<int> landmark_indices;
  int nose_tip_index = 0;
  // Optional: eyes, nose tip, lip corners. Required only for MaskKind::kFivePoint.
  std::vector<int> mask2_centers;
  // Width of the mask Gaussian in model units; <= 0 selects the default.
  double sigma_n = 0.0;
};

// Identity and expression coefficients. The concatenated order [identity,
// expression] is the one used by every parameter vector in the library.
struct ShapeParams {
  Eigen::VectorXd identity;
  Eigen::VectorXd expression;

  Eigen::VectorXd concatenated() const;
  static ShapeParams split(const Eigen::VectorXd& p, int num_identity);
};

// Immutable linear face model. Construction validates the data and
// precomputes the mean-shape vertex normals and the masks.
class ShapeModel {
 public:
  explicit ShapeModel(ShapeModelData data);

  int num_vertices() const { return static_cast<int>(data_.mean_shape.cols()); }
  int num_identity() const { return static_cast<int>(data_.identity_bases.size()); }
  int num_expression() const { return static_cast<int>(data_.expression_bases.size()); }
  int num_shape_params() const { return num_identity() + num_expression(); }
  int num_landmarks() const { return static_cast<int>(data_.landmark_indices.size()); }

  const ShapeModelData& data() const { return data_; }
  const Eigen::Matrix3Xd& mean_shape() const { return data_.mean_shape; }
  const std::vector<Triangle>& triangles() const { return data_.triangles; }
  const std::vector<int>& landmark_indices() const { return data_.landmark_indices; }
  int nose_tip_index() const { return data_.nose_tip_index; }
  double sigma_n() const { return sigma_n_; }

  // 3Q x (N_I + N_E); row 3q + c holds coordinate c of vertex q.
  const Eigen::MatrixXd& basis_matrix() const { return basis_matrix_; }
  // Per-basis standard deviations, concatenated [identity, expression].
  Eigen::VectorXd basis_stddev() const;

  const Eigen::Matrix3Xd& mean_normals() const { return normals_; }
  // Throws std::invalid_argument for kFivePoint when the model has no centres.
  const Eigen::VectorXd& mask(MaskKind kind = MaskKind::kNoseTip) const;

 private:
  ShapeModelData data_;
  double sigma_n_ = 0.0;
  Eigen::MatrixXd basis_matrix_;
  Eigen::Matrix3Xd normals_;
  Eigen::VectorXd mask_nose_;
  Eigen::VectorXd mask_five_;
  Eigen::VectorXd mask_ones_;
};

// Throws std::invalid_argument describing the first violated invariant.
void validate(const ShapeModelData& data);

// S0 + sum_k p_k B_k. `p` is the concatenated [identity, expression] vector.
Eigen::Matrix3Xd compose_shape(const ShapeModel& model, const Eigen::VectorXd& p);
Eigen::Matrix3Xd compose_shape(const ShapeModel& model, const ShapeParams& params);

// Area-weighted average of incident face normals, normalised per vertex.
// Throws on degenerate triangles and on vertices no triangle references.
Eigen::Matrix3Xd compute_vertex_normals(const Eigen::Matrix3Xd& vertices,
                                        std::span<const Triangle> triangles);
Eigen::Matrix3Xd compute_mean_normals(const ShapeModel& model);

// 0.3 x radius of the bounding sphere (about the centroid) of `vertices`.
double default_sigma_n(const Eigen::Matrix3Xd& vertices);

// max_c exp(-|v_q - v_c|^2 / (2 sigma_n^2)) before standardisation.
Eigen::VectorXd mask_falloff(const Eigen::Matrix3Xd& vertices, std::span<const int> centers,
                             double sigma_n);

// Zero mean, unit (population) standard deviation. Throws on zero variance.
Eigen::VectorXd standardize(const Eigen::VectorXd& values);

Eigen::VectorXd compute_mask(const ShapeModel& model, double sigma_n);
Eigen::VectorXd compute_mask2(const ShapeModel& model, std::span<const int> centers,
                              double sigma_n);

}  // namespace vislayer
