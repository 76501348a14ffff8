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
#include "vislayer/synthetic_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace vislayer {

namespace {

// Ellipsoid semi-axes (x right, y down towards the chin, z towards the viewer).
constexpr double kHalfWidth = 1.0;
constexpr double kHalfHeight = 1.25;
constexpr double kDepth = 0.9;
constexpr double kMaxYaw = 75.0 * std::numbers::pi / 180.0;
constexpr double kMaxPitch = 60.0 * std::numbers::pi / 180.0;
constexpr double kNoseHeight = 0.35;
constexpr double kNoseWidth = 0.18;

struct GridPoint {
  double u;  // normalised column coordinate in [-1, 1]
  double v;  // normalised row coordinate in [-1, 1]
};

// Landmark layout in normalised grid coordinates. The nose tip is added
// separately because it is located by geometry, not by grid position.
constexpr GridPoint kLandmarkLayout[] = {
    {-0.55, -0.55}, {-0.25, -0.60}, {0.25, -0.60}, {0.55, -0.55},  // brows
    {-0.58, -0.30}, {-0.20, -0.30}, {0.20, -0.30}, {0.58, -0.30},  // eye corners
    {-0.16, 0.12},  {0.16, 0.12},                                  // nostrils
    {-0.32, 0.45},  {0.32, 0.45},   {0.0, 0.36},   {0.0, 0.56},    // mouth
    {0.0, 0.95},                                                   // chin
    {-0.95, -0.40}, {0.95, -0.40},  {-0.95, 0.05}, {0.95, 0.05},   // contour
    {-0.80, 0.60},  {0.80, 0.60},
};

constexpr GridPoint kEyeCenters[] = {{-0.39, -0.30}, {0.39, -0.30}};
constexpr GridPoint kLipCorners[] = {{-0.32, 0.45}, {0.32, 0.45}};

int nearest_free_vertex(const std::vector<GridPoint>& grid, GridPoint target,
                        const std::vector<bool>& taken) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < grid.size(); ++q) {
    if (taken[q]) continue;
    const double du = grid[q].u - target.u;
    const double dv = grid[q].v - target.v;
    const double d = du * du + dv * dv;
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(q);
    }
  }
  return best;
}

// Sum of a few random Gaussian bumps over the grid, rescaled so the RMS
// per-vertex displacement is 1.
Eigen::Matrix3Xd smooth_basis(const std::vector<GridPoint>& grid, std::mt19937_64& rng,
                              double v_lo, double v_hi) {
  std::uniform_real_distribution<double> center_u(-1.0, 1.0);
  std::uniform_real_distribution<double> center_v(v_lo, v_hi);
  std::uniform_real_distribution<double> width(0.3, 0.7);
  std::normal_distribution<double> amp(0.0, 1.0);

  Eigen::Matrix3Xd basis = Eigen::Matrix3Xd::Zero(3, static_cast<Eigen::Index>(grid.size()));
  for (int bump = 0; bump < 5; ++bump) {
    const double cu = center_u(rng);
    const double cv = center_v(rng);
    const double w = width(rng);
    Eigen::Vector3d a;
    a << amp(rng), amp(rng), amp(rng);
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const double du = grid[q].u - cu;
      const double dv = grid[q].v - cv;
      basis.col(static_cast<Eigen::Index>(q)) += a * std::exp(-(du * du + dv * dv) / (2 * w * w));
    }
  }
  const double rms = std::sqrt(basis.squaredNorm() / static_cast<double>(grid.size()));
  return basis / rms;
}

}  // namespace

ShapeModel generate_synthetic_model(const SyntheticModelOptions& options) {
  if (options.target_vertices < 50) {
    throw std::invalid_argument("synthetic model needs at least 50 vertices");
  }
  if (options.num_identity < 1 || options.num_expression < 1) {
    throw std::invalid_argument("synthetic model needs at least one identity and one expression basis");
  }

  int nx = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(options.target_vertices))));
  if (nx % 2 == 0) ++nx;
  int ny = (options.target_vertices + nx - 1) / nx;
  if (ny % 2 == 0) ++ny;
  const int q_count = nx * ny;

  ShapeModelData d;
  d.mean_shape.resize(3, q_count);
  std::vector<GridPoint> grid(q_count);
  const double y_nose = 0.0;
  for (int j = 0; j < ny; ++j) {
    const double v = 2.0 * j / (ny - 1) - 1.0;
    const double pitch = v * kMaxPitch;
    for (int i = 0; i < nx; ++i) {
      const double u = 2.0 * i / (nx - 1) - 1.0;
      const double yaw = u * kMaxYaw;
      const int q = j * nx + i;
      grid[q] = {u, v};
      const double x = kHalfWidth * std::sin(yaw) * std::cos(pitch);
      const double y = kHalfHeight * std::sin(pitch);
      double z = kDepth * std::cos(yaw) * std::cos(pitch);
      const double r2 = x * x + (y - y_nose) * (y - y_nose);
      z += kNoseHeight * std::exp(-r2 / (2 * kNoseWidth * kNoseWidth));
      d.mean_shape.col(q) << x, y, z;
    }
  }

  // Mirror the diagonal split about the centre column so the mesh (and hence
  // the vertex normals) is exactly left-right symmetric. Winding gives +z
  // face normals.
  const int half = (nx - 1) / 2;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = j * nx + i;
      const int b = a + 1;
      const int c = a + nx;
      const int e = c + 1;
      if (i < half) {
        d.triangles.push_back({a, b, e});
        d.triangles.push_back({a, e, c});
      } else {
        d.triangles.push_back({a, b, c});
        d.triangles.push_back({b, e, c});
      }
    }
  }

  Eigen::Index nose = 0;
  d.mean_shape.row(2).maxCoeff(&nose);
  d.nose_tip_index = static_cast<int>(nose);

  std::vector<bool> taken(q_count, false);
  taken[nose] = true;
  d.landmark_indices.push_back(d.nose_tip_index);
  for (const GridPoint& p : kLandmarkLayout) {
    const int q = nearest_free_vertex(grid, p, taken);
    if (q < 0) break;
    taken[q] = true;
    d.landmark_indices.push_back(q);
  }

  const std::vector<bool> none(q_count, false);
  d.mask2_centers = {nearest_free_vertex(grid, kEyeCenters[0], none),
                     nearest_free_vertex(grid, kEyeCenters[1], none), d.nose_tip_index,
                     nearest_free_vertex(grid, kLipCorners[0], none),
                     nearest_free_vertex(grid, kLipCorners[1], none)};

  std::mt19937_64 rng(options.seed);
  d.identity_stddev.resize(options.num_identity);
  for (int k = 0; k < options.num_identity; ++k) {
    d.identity_bases.push_back(smooth_basis(grid, rng, -1.0, 1.0));
    d.identity_stddev[k] = 0.12 * std::pow(0.85, k);
  }
  // Expression bases concentrate on the lower face.
  d.expression_stddev.resize(options.num_expression);
  for (int k = 0; k < options.num_expression; ++k) {
    d.expression_bases.push_back(smooth_basis(grid, rng, 0.1, 1.0));
    d.expression_stddev[k] = 0.08 * std::pow(0.85, k);
  }

  d.sigma_n = default_sigma_n(d.mean_shape);
  return ShapeModel(std::move(d));
}

}  // namespace vislayer
