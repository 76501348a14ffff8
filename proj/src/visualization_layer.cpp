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
#include "vislayer/visualization_layer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <Eigen/Geometry>

namespace vislayer {

namespace {

bool same_config(const RasterConfig& a, const RasterConfig& b) {
  return a.width == b.width && a.height == b.height && a.sigma == b.sigma &&
         a.support_radius == b.support_radius && a.background_value == b.background_value &&
         a.mask == b.mask;
}

std::int64_t cell_key(const Eigen::Vector2i& cell) {
  return (static_cast<std::int64_t>(cell.x()) << 32) ^
         static_cast<std::int64_t>(static_cast<std::uint32_t>(cell.y()));
}

// Splat weight of a vertex projected at (x, y) on pixel centre (u, v).
double splat_weight(int u, int v, double x, double y, double inv_two_sigma2) {
  const double du = u - x;
  const double dv = v - y;
  return std::exp(-(du * du + dv * dv) * inv_two_sigma2);
}

// Fills image and weight_sum from the contributor lists.
void resolve_pixels(VisualizationOutput& out, const Eigen::VectorXd& mask) {
  const RasterConfig& cfg = out.config;
  out.image.setConstant(cfg.height, cfg.width, cfg.background_value);
  out.weight_sum.setZero(cfg.height, cfg.width);
  for (int v = 0; v < cfg.height; ++v) {
    for (int u = 0; u < cfg.width; ++u) {
      const auto list = out.contributors(v, u);
      if (list.empty()) continue;
      double num = 0.0;
      double den = 0.0;
      for (const Contribution& c : list) {
        num += c.frontability * mask[c.vertex] * c.weight;
        den += c.weight;
      }
      out.image(v, u) = num / den;
      out.weight_sum(v, u) = den;
    }
  }
}

}  // namespace

void RasterConfig::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
  if (support_radius < 1) throw std::invalid_argument("support_radius must be >= 1");
  if (!std::isfinite(background_value)) throw std::invalid_argument("background must be finite");
}

std::span<const Contribution> VisualizationOutput::contributors(int row, int col) const {
  const int pixel = row * config.width + col;
  return std::span<const Contribution>(contributions.data() + pixel_offsets[pixel],
                                       contributions.data() + pixel_offsets[pixel + 1]);
}

bool VisualizationOutput::same_support(const VisualizationOutput& other) const {
  if (pixel_offsets != other.pixel_offsets || visible != other.visible) return false;
  for (std::size_t i = 0; i < contributions.size(); ++i) {
    if (contributions[i].vertex != other.contributions[i].vertex) return false;
  }
  return true;
}

Eigen::VectorXd frontability_unclamped(const ShapeModel& model, const CameraMatrix& camera) {
  const Eigen::Vector3d a = camera.row1();
  const Eigen::Vector3d b = camera.row2();
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("frontability: camera row has zero norm");
  }
  const Eigen::Vector3d axis = a.cross(b) / (na * nb);
  return model.mean_normals().transpose() * axis;
}

Eigen::VectorXd frontability(const ShapeModel& model, const CameraMatrix& camera) {
  return frontability_unclamped(model, camera).cwiseMax(0.0);
}

Eigen::MatrixXd frontability_jacobian(const ShapeModel& model, const CameraMatrix& camera) {
  const Eigen::Vector3d a = camera.row1();
  const Eigen::Vector3d b = camera.row2();
  const double na = a.norm();
  const double nb = b.norm();
  const Eigen::VectorXd h = frontability_unclamped(model, camera);
  const Eigen::Matrix3Xd& normals = model.mean_normals();
  const double inv = 1.0 / (na * nb);

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(model.num_vertices(), 6);
  for (int q = 0; q < model.num_vertices(); ++q) {
    if (!(h[q] > 0.0)) continue;
    const Eigen::Vector3d n = normals.col(q);
    // (a x b).n = a.(b x n) = b.(n x a)
    jac.block<1, 3>(q, 0) = (b.cross(n) * inv - h[q] * a / (na * na)).transpose();
    jac.block<1, 3>(q, 3) = (n.cross(a) * inv - h[q] * b / (nb * nb)).transpose();
  }
  return jac;
}

Eigen::VectorXd vertex_depth(const Eigen::Matrix3Xd& vertices, const CameraMatrix& camera) {
  const Eigen::Vector3d axis = camera.row1().cross(camera.row2());
  const double len = axis.norm();
  if (len == 0.0) throw std::invalid_argument("vertex_depth: camera rows are parallel");
  return -(vertices.transpose() * (axis / len));
}

Eigen::Vector2i pixel_cell(double x, double y) {
  constexpr double kLimit = 1 << 30;
  return {static_cast<int>(std::floor(std::clamp(x, -kLimit, kLimit) + 0.5)),
          static_cast<int>(std::floor(std::clamp(y, -kLimit, kLimit) + 0.5))};
}

std::vector<bool> select_visible(const Eigen::Matrix2Xd& projected, const Eigen::VectorXd& depth,
                                 const Eigen::VectorXd& g) {
  const Eigen::Index n = projected.cols();
  if (depth.size() != n || g.size() != n) {
    throw std::invalid_argument("select_visible: projected/depth/g sizes differ");
  }
  std::unordered_map<std::int64_t, int> winner;
  winner.reserve(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) {
    if (!(g[q] > 0.0)) continue;
    const auto key = cell_key(pixel_cell(projected(0, q), projected(1, q)));
    auto [it, inserted] = winner.try_emplace(key, q);
    if (!inserted && depth[q] < depth[it->second]) it->second = q;
  }
  std::vector<bool> visible(static_cast<std::size_t>(n), false);
  for (const auto& [key, q] : winner) visible[q] = true;
  return visible;
}

VisualizationOutput rasterize_forward(const ShapeModel& model, const ParamVector& params,
                                      const RasterConfig& config) {
  config.validate();
  check_dimensions(model, params);
  const Eigen::Matrix3Xd shape = compose_shape(model, params.shape);

  VisualizationOutput out;
  out.config = config;
  out.params = params.flat();
  out.projected = project_points(shape, params.camera);
  if (!out.projected.allFinite()) {
    throw std::invalid_argument("rasterize_forward: projected coordinates are not finite");
  }
  out.frontability = frontability(model, params.camera);
  out.visible = select_visible(out.projected, vertex_depth(shape, params.camera), out.frontability);

  const int w = config.width;
  const int h = config.height;
  const int r = config.support_radius;
  const double inv_two_sigma2 = 1.0 / (2.0 * config.sigma * config.sigma);

  // Two passes (count, then fill) so each pixel's list is ordered by vertex.
  auto for_each_splat = [&](auto&& fn) {
    for (int q = 0; q < model.num_vertices(); ++q) {
      if (!out.visible[q]) continue;
      const double x = out.projected(0, q);
      const double y = out.projected(1, q);
      const int u0 = std::max(0, static_cast<int>(std::ceil(x - r)));
      const int u1 = std::min(w - 1, static_cast<int>(std::floor(x + r)));
      const int v0 = std::max(0, static_cast<int>(std::ceil(y - r)));
      const int v1 = std::min(h - 1, static_cast<int>(std::floor(y + r)));
      for (int v = v0; v <= v1; ++v) {
        for (int u = u0; u <= u1; ++u) {
          const double wt = splat_weight(u, v, x, y, inv_two_sigma2);
          // Underflowed weights contribute nothing to V or its gradient.
          if (wt > 0.0) fn(q, v * w + u, wt);
        }
      }
    }
  };

  out.pixel_offsets.assign(static_cast<std::size_t>(w) * h + 1, 0);
  for_each_splat([&](int, int pixel, double) { ++out.pixel_offsets[pixel + 1]; });
  for (std::size_t i = 1; i < out.pixel_offsets.size(); ++i) {
    out.pixel_offsets[i] += out.pixel_offsets[i - 1];
  }
  out.contributions.resize(out.pixel_offsets.back());
  std::vector<int> cursor(out.pixel_offsets.begin(), out.pixel_offsets.end() - 1);
  for_each_splat([&](int q, int pixel, double wt) {
    out.contributions[cursor[pixel]++] = {q, wt, out.frontability[q]};
  });

  resolve_pixels(out, model.mask(config.mask));
  return out;
}

VisualizationOutput rasterize_frozen(const VisualizationOutput& reference,
                                     const ShapeModel& model, const ParamVector& params,
                                     const RasterConfig& config) {
  config.validate();
  check_dimensions(model, params);
  if (!same_config(reference.config, config)) {
    throw std::invalid_argument("rasterize_frozen: reference was rendered with another config");
  }
  VisualizationOutput out = reference;
  out.params = params.flat();
  out.projected = project_all(model, params);
  // Clamp signs are frozen too: contributors were unclamped in the reference.
  out.frontability = frontability_unclamped(model, params.camera);
  const double inv_two_sigma2 = 1.0 / (2.0 * config.sigma * config.sigma);
  for (int v = 0; v < config.height; ++v) {
    for (int u = 0; u < config.width; ++u) {
      const int pixel = v * config.width + u;
      for (int i = out.pixel_offsets[pixel]; i < out.pixel_offsets[pixel + 1]; ++i) {
        Contribution& c = out.contributions[i];
        c.weight = splat_weight(u, v, out.projected(0, c.vertex), out.projected(1, c.vertex),
                                inv_two_sigma2);
        c.frontability = out.frontability[c.vertex];
      }
    }
  }
  resolve_pixels(out, model.mask(config.mask));
  return out;
}

Eigen::VectorXd rasterize_backward(const VisualizationOutput& output,
                                   const Eigen::MatrixXd& upstream, const ShapeModel& model,
                                   const ParamVector& params, const RasterConfig& config) {
  check_dimensions(model, params);
  if (!same_config(output.config, config)) {
    throw std::invalid_argument("rasterize_backward: forward record used a different config");
  }
  const Eigen::VectorXd flat = params.flat();
  if (output.params.size() != flat.size() || output.params != flat) {
    throw std::invalid_argument("rasterize_backward: forward record used different parameters");
  }
  if (upstream.rows() != config.height || upstream.cols() != config.width) {
    throw std::invalid_argument("rasterize_backward: upstream gradient has wrong dimensions");
  }
  if (static_cast<int>(output.visible.size()) != model.num_vertices() ||
      output.pixel_offsets.size() != static_cast<std::size_t>(config.width) * config.height + 1) {
    throw std::invalid_argument("rasterize_backward: forward record does not match the model");
  }

  const int nq = model.num_vertices();
  const Eigen::VectorXd& mask = model.mask(config.mask);
  const double inv_sigma2 = 1.0 / (config.sigma * config.sigma);

  // Per-vertex sensitivities: coefficient of dg_q, dx_q and dy_q.
  Eigen::VectorXd coef_g = Eigen::VectorXd::Zero(nq);
  Eigen::VectorXd coef_x = Eigen::VectorXd::Zero(nq);
  Eigen::VectorXd coef_y = Eigen::VectorXd::Zero(nq);
  for (int v = 0; v < config.height; ++v) {
    for (int u = 0; u < config.width; ++u) {
      const double up = upstream(v, u);
      if (up == 0.0) continue;
      const auto list = output.contributors(v, u);
      if (list.empty()) continue;
      const double value = output.image(v, u);
      const double scale = up / output.weight_sum(v, u);
      for (const Contribution& c : list) {
        const double a = mask[c.vertex];
        coef_g[c.vertex] += scale * a * c.weight;
        // dw/dx = w (u - x) / sigma^2
        const double t = scale * (a * c.frontability - value) * c.weight * inv_sigma2;
        coef_x[c.vertex] += t * (u - output.projected(0, c.vertex));
        coef_y[c.vertex] += t * (v - output.projected(1, c.vertex));
      }
    }
  }

  const Eigen::Matrix3Xd shape = compose_shape(model, params.shape);
  const Eigen::MatrixXd g_jac = frontability_jacobian(model, params.camera);
  const Eigen::Vector3d m1 = params.camera.row1();
  const Eigen::Vector3d m2 = params.camera.row2();

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd vertex_grad = Eigen::VectorXd::Zero(3 * nq);
  for (int q = 0; q < nq; ++q) {
    if (coef_g[q] == 0.0 && coef_x[q] == 0.0 && coef_y[q] == 0.0) continue;
    const Eigen::Vector3d s = shape.col(q);
    grad.segment<3>(0) += coef_x[q] * s + coef_g[q] * g_jac.block<1, 3>(q, 0).transpose();
    grad[3] += coef_x[q];
    grad.segment<3>(4) += coef_y[q] * s + coef_g[q] * g_jac.block<1, 3>(q, 3).transpose();
    grad[7] += coef_y[q];
    vertex_grad.segment<3>(3 * q) = coef_x[q] * m1 + coef_y[q] * m2;
  }
  if (model.num_shape_params() > 0) {
    grad.tail(model.num_shape_params()) = model.basis_matrix().transpose() * vertex_grad;
  }
  return grad;
}

}  // namespace vislayer
