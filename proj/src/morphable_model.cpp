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
#include "vislayer/morphable_model.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace vislayer {

namespace {

void check_index(int index, int num_vertices, const std::string& what) {
  if (index < 0 || index >= num_vertices) {
    throw std::invalid_argument(what + " index " + std::to_string(index) +
                                " out of range [0, " + std::to_string(num_vertices) + ")");
  }
}

void check_basis_list(const std::vector<Eigen::Matrix3Xd>& bases, const Eigen::VectorXd& stddev,
                      Eigen::Index num_vertices, const std::string& what) {
  for (std::size_t k = 0; k < bases.size(); ++k) {
    if (bases[k].cols() != num_vertices) {
      throw std::invalid_argument(what + " basis " + std::to_string(k) + " has " +
                                  std::to_string(bases[k].cols()) + " columns, expected " +
                                  std::to_string(num_vertices));
    }
    if (!bases[k].allFinite()) {
      throw std::invalid_argument(what + " basis " + std::to_string(k) + " is not finite");
    }
  }
  if (stddev.size() != static_cast<Eigen::Index>(bases.size())) {
    throw std::invalid_argument(what + " stddev has " + std::to_string(stddev.size()) +
                                " entries for " + std::to_string(bases.size()) + " bases");
  }
  for (Eigen::Index k = 0; k < stddev.size(); ++k) {
    if (!std::isfinite(stddev[k]) || stddev[k] < 0.0) {
      throw std::invalid_argument(what + " stddev " + std::to_string(k) +
                                  " must be finite and non-negative");
    }
  }
}

}  // namespace

Eigen::VectorXd ShapeParams::concatenated() const {
  Eigen::VectorXd p(identity.size() + expression.size());
  p << identity, expression;
  return p;
}

ShapeParams ShapeParams::split(const Eigen::VectorXd& p, int num_identity) {
  if (num_identity < 0 || num_identity > p.size()) {
    throw std::invalid_argument("ShapeParams::split: identity count exceeds vector length");
  }
  return {p.head(num_identity), p.tail(p.size() - num_identity)};
}

void validate(const ShapeModelData& data) {
  const Eigen::Index q = data.mean_shape.cols();
  if (q == 0) throw std::invalid_argument("mean shape has no vertices");
  if (!data.mean_shape.allFinite()) throw std::invalid_argument("mean shape is not finite");
  check_basis_list(data.identity_bases, data.identity_stddev, q, "identity");
  check_basis_list(data.expression_bases, data.expression_stddev, q, "expression");

  const int nq = static_cast<int>(q);
  for (std::size_t t = 0; t < data.triangles.size(); ++t) {
    for (int v : data.triangles[t]) check_index(v, nq, "triangle " + std::to_string(t) + " vertex");
  }
  std::set<int> seen;
  for (int b : data.landmark_indices) {
    check_index(b, nq, "landmark");
    if (!seen.insert(b).second) {
      throw std::invalid_argument("landmark index " + std::to_string(b) + " appears twice");
    }
  }
  check_index(data.nose_tip_index, nq, "nose tip");
  if (!data.mask2_centers.empty()) {
    if (data.mask2_centers.size() != 5) {
      throw std::invalid_argument("mask2 needs exactly 5 centres");
    }
    for (int c : data.mask2_centers) check_index(c, nq, "mask2 centre");
  }
  if (!std::isfinite(data.sigma_n)) throw std::invalid_argument("sigma_n is not finite");
}

ShapeModel::ShapeModel(ShapeModelData data) : data_(std::move(data)) {
  validate(data_);
  const Eigen::Index q = data_.mean_shape.cols();
  const int n = num_shape_params();

  basis_matrix_.resize(3 * q, n);
  int j = 0;
  for (const auto& b : data_.identity_bases) {
    basis_matrix_.col(j++) = Eigen::Map<const Eigen::VectorXd>(b.data(), 3 * q);
  }
  for (const auto& b : data_.expression_bases) {
    basis_matrix_.col(j++) = Eigen::Map<const Eigen::VectorXd>(b.data(), 3 * q);
  }

  normals_ = compute_vertex_normals(data_.mean_shape, data_.triangles);
  sigma_n_ = data_.sigma_n > 0.0 ? data_.sigma_n : default_sigma_n(data_.mean_shape);

  const int nose[] = {data_.nose_tip_index};
  mask_nose_ = standardize(mask_falloff(data_.mean_shape, nose, sigma_n_));
  if (!data_.mask2_centers.empty()) {
    mask_five_ = standardize(mask_falloff(data_.mean_shape, data_.mask2_centers, sigma_n_));
  }
  mask_ones_ = Eigen::VectorXd::Ones(q);
}

Eigen::VectorXd ShapeModel::basis_stddev() const {
  Eigen::VectorXd s(num_shape_params());
  s << data_.identity_stddev, data_.expression_stddev;
  return s;
}

const Eigen::VectorXd& ShapeModel::mask(MaskKind kind) const {
  switch (kind) {
    case MaskKind::kNoseTip:
      return mask_nose_;
    case MaskKind::kFivePoint:
      if (mask_five_.size() == 0) {
        throw std::invalid_argument("model defines no five-point mask centres");
      }
      return mask_five_;
    case MaskKind::kNone:
      return mask_ones_;
  }
  throw std::invalid_argument("unknown mask kind");
}

Eigen::Matrix3Xd compose_shape(const ShapeModel& model, const Eigen::VectorXd& p) {
  if (p.size() != model.num_shape_params()) {
    throw std::invalid_argument("compose_shape: expected " +
                                std::to_string(model.num_shape_params()) +
                                " shape parameters, got " + std::to_string(p.size()));
  }
  Eigen::Matrix3Xd shape = model.mean_shape();
  if (p.size() > 0) {
    Eigen::Map<Eigen::VectorXd>(shape.data(), shape.size()).noalias() +=
        model.basis_matrix() * p;
  }
  return shape;
}

Eigen::Matrix3Xd compose_shape(const ShapeModel& model, const ShapeParams& params) {
  if (params.identity.size() != model.num_identity() ||
      params.expression.size() != model.num_expression()) {
    throw std::invalid_argument("compose_shape: identity/expression lengths do not match model");
  }
  return compose_shape(model, params.concatenated());
}

Eigen::Matrix3Xd compute_vertex_normals(const Eigen::Matrix3Xd& vertices,
                                        std::span<const Triangle> triangles) {
  Eigen::Matrix3Xd normals = Eigen::Matrix3Xd::Zero(3, vertices.cols());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    const Eigen::Vector3d e1 = vertices.col(tri[1]) - vertices.col(tri[0]);
    const Eigen::Vector3d e2 = vertices.col(tri[2]) - vertices.col(tri[0]);
    // Twice the area times the unit normal, so summing weights by area.
    const Eigen::Vector3d n = e1.cross(e2);
    const double scale = e1.norm() * e2.norm();
    if (!(n.norm() > 1e-12 * scale) || scale == 0.0) {
      throw std::invalid_argument("triangle " + std::to_string(t) + " is degenerate");
    }
    for (int v : tri) normals.col(v) += n;
  }
  for (Eigen::Index q = 0; q < normals.cols(); ++q) {
    const double len = normals.col(q).norm();
    if (len == 0.0) {
      throw std::invalid_argument("vertex " + std::to_string(q) +
                                  " has no incident triangle (or its normals cancel)");
    }
    normals.col(q) /= len;
  }
  return normals;
}

Eigen::Matrix3Xd compute_mean_normals(const ShapeModel& model) {
  return compute_vertex_normals(model.mean_shape(), model.triangles());
}

double default_sigma_n(const Eigen::Matrix3Xd& vertices) {
  const Eigen::Vector3d centroid = vertices.rowwise().mean();
  return 0.3 * (vertices.colwise() - centroid).colwise().norm().maxCoeff();
}

Eigen::VectorXd mask_falloff(const Eigen::Matrix3Xd& vertices, std::span<const int> centers,
                             double sigma_n) {
  if (!(sigma_n > 0.0)) throw std::invalid_argument("sigma_n must be positive");
  if (centers.empty()) throw std::invalid_argument("mask needs at least one centre");
  const int nq = static_cast<int>(vertices.cols());
  for (int c : centers) check_index(c, nq, "mask centre");

  const double inv = 1.0 / (2.0 * sigma_n * sigma_n);
  Eigen::VectorXd values(nq);
  for (int q = 0; q < nq; ++q) {
    double best = 0.0;
    for (int c : centers) {
      best = std::max(best, std::exp(-(vertices.col(q) - vertices.col(c)).squaredNorm() * inv));
    }
    values[q] = best;
  }
  return values;
}

Eigen::VectorXd standardize(const Eigen::VectorXd& values) {
  if (values.size() == 0) throw std::invalid_argument("cannot standardise an empty vector");
  const double mean = values.mean();
  const Eigen::VectorXd centered = values.array() - mean;
  const double stddev = std::sqrt(centered.squaredNorm() / static_cast<double>(values.size()));
  if (!(stddev > 1e-12 * std::max(1.0, std::abs(mean)))) {
    throw std::invalid_argument("cannot standardise: values have zero variance");
  }
  return centered / stddev;
}

Eigen::VectorXd compute_mask(const ShapeModel& model, double sigma_n) {
  const int nose[] = {model.nose_tip_index()};
  return standardize(mask_falloff(model.mean_shape(), nose, sigma_n));
}

Eigen::VectorXd compute_mask2(const ShapeModel& model, std::span<const int> centers,
                              double sigma_n) {
  if (centers.size() != 5) throw std::invalid_argument("mask2 needs exactly 5 centres");
  return standardize(mask_falloff(model.mean_shape(), centers, sigma_n));
}

}  // namespace vislayer
