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

// Rendering setup for the visualization layer. Pixel (row v, col u) has its
// centre at image coordinate (u, v).
struct RasterConfig {
  int width = 32;
  int height = 32;
  double sigma = 1.0;           // Gaussian splat width, pixels
  int support_radius = 2;       // Chebyshev radius of the splat support
  double background_value = 0.0;
  MaskKind mask = MaskKind::kNoseTip;

  void validate() const;
};

struct Contribution {
  int vertex;
  double weight;
  double frontability;
};

// Rendered image plus everything the backward pass needs. The contributor
// lists are the frozen per-pixel support sets D(u, v), in vertex order.
struct VisualizationOutput {
  Eigen::MatrixXd image;       // height x width
  Eigen::MatrixXd weight_sum;  // sum of w over D(u, v); 0 for empty pixels
  std::vector<int> pixel_offsets;  // CSR offsets, size height*width + 1
  std::vector<Contribution> contributions;
  std::vector<bool> visible;
  Eigen::VectorXd frontability;
  Eigen::Matrix2Xd projected;
  // Inputs the record was produced from; backward refuses anything else.
  Eigen::VectorXd params;
  RasterConfig config;

  std::span<const Contribution> contributors(int row, int col) const;
  int num_contributions() const { return static_cast<int>(contributions.size()); }
  // True when both records have identical support sets (vertex lists per pixel).
  bool same_support(const VisualizationOutput& other) const;
};

// (m1 x m2) / (|m1| |m2|) . N0 per vertex, before clamping. Throws when a row
// of the camera has zero norm.
Eigen::VectorXd frontability_unclamped(const ShapeModel& model, const CameraMatrix& camera);
// g = max(0, frontability_unclamped).
Eigen::VectorXd frontability(const ShapeModel& model, const CameraMatrix& camera);

// d g_q / d(m1, m2) as a Q x 6 matrix (columns m1,m2,m3,m5,m6,m7). Rows of
// clamped vertices (unclamped value <= 0) are zero.
Eigen::MatrixXd frontability_jacobian(const ShapeModel& model, const CameraMatrix& camera);

// Depth along the unit camera axis (m1 x m2)/|m1 x m2|, negated: smaller
// values are closer to the image plane.
Eigen::VectorXd vertex_depth(const Eigen::Matrix3Xd& vertices, const CameraMatrix& camera);

// Integer pixel cell of a projected point (round half up).
Eigen::Vector2i pixel_cell(double x, double y);

// Drops vertices with g <= 0; among the rest, keeps the smallest-depth vertex
// per pixel cell (lowest index on exact ties).
std::vector<bool> select_visible(const Eigen::Matrix2Xd& projected, const Eigen::VectorXd& depth,
                                 const Eigen::VectorXd& g);

// V(u,v) = sum g a w / sum w over visible vertices within the support.
VisualizationOutput rasterize_forward(const ShapeModel& model, const ParamVector& params,
                                      const RasterConfig& config);

// Same as rasterize_forward but with the support sets (visibility and pixel
// membership) taken from `reference`. Used for frozen-set finite differences.
VisualizationOutput rasterize_frozen(const VisualizationOutput& reference,
                                     const ShapeModel& model, const ParamVector& params,
                                     const RasterConfig& config);

// sum_{u,v} upstream(u,v) dV(u,v)/dtheta over the flat parameter vector.
// `output` must come from rasterize_forward with the same params and config.
Eigen::VectorXd rasterize_backward(const VisualizationOutput& output,
                                   const Eigen::MatrixXd& upstream, const ShapeModel& model,
                                   const ParamVector& params, const RasterConfig& config);

}  // namespace vislayer
