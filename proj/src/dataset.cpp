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
#include "vislayer/dataset.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

#include "vislayer/fitting.hpp"

namespace vislayer {

BoundingBox projected_bbox(const ShapeModel& model, const ParamVector& params) {
  const Eigen::Matrix2Xd pts = project_all(model, params);
  const Eigen::Vector2d lo = pts.rowwise().minCoeff();
  const Eigen::Vector2d hi = pts.rowwise().maxCoeff();
  return {lo.x(), lo.y(), hi.x() - lo.x(), hi.y() - lo.y()};
}

std::vector<FaceSample> generate_synthetic_dataset(const ShapeModel& model,
                                                   const DatasetOptions& options) {
  if (options.count < 0) throw std::invalid_argument("generate_synthetic_dataset: count < 0");
  if (options.image_size < 4) {
    throw std::invalid_argument("generate_synthetic_dataset: image_size must be >= 4");
  }
  RasterConfig photo = options.photo;
  photo.width = photo.height = options.image_size;
  photo.validate();

  constexpr double kDeg = std::numbers::pi / 180.0;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::VectorXd stddev = model.basis_stddev();
  const Eigen::Vector3d centroid = model.mean_shape().rowwise().mean();
  const double size = options.image_size;

  std::vector<FaceSample> out;
  out.reserve(options.count);
  long long draws = 0;
  while (static_cast<int>(out.size()) < options.count) {
    if (++draws > 100LL * options.count + 1000) {
      throw std::runtime_error("generate_synthetic_dataset: too few poses keep " +
                               std::to_string(options.min_visible_landmarks) +
                               " landmarks visible");
    }
    const double yaw = options.max_yaw_deg * kDeg * unit(rng);
    const double pitch = options.max_pitch_deg * kDeg * unit(rng);
    const double roll = options.max_roll_deg * kDeg * unit(rng);
    const double scale = options.scale_fraction * size * (1.0 + options.scale_jitter * unit(rng));
    const double cx = 0.5 * (size - 1.0) + options.center_jitter * size * unit(rng);
    const double cy = 0.5 * (size - 1.0) + options.center_jitter * size * unit(rng);

    const Eigen::Matrix3d rotation =
        (Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()) *
         Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()))
            .toRotationMatrix();
    const Eigen::Vector3d c = scale * rotation * centroid;

    FaceSample s;
    s.truth.camera = CameraMatrix::from_rotation(rotation, scale, cx - c.x(), cy - c.y());
    s.truth.shape.resize(stddev.size());
    for (Eigen::Index k = 0; k < stddev.size(); ++k) {
      double z = normal(rng);
      while (std::abs(z) > 2.0) z = normal(rng);
      s.truth.shape[k] = options.shape_sigma * stddev[k] * z;
    }
    s.landmarks = project_landmarks(model, s.truth);
    s.landmarks.visible = landmark_visibility(model, s.truth);
    if (s.landmarks.num_visible() < options.min_visible_landmarks) continue;
    s.bbox = projected_bbox(model, s.truth);
    s.initial = initialize_params(s.bbox, model);
    s.image = rasterize_forward(model, s.truth, photo).image;
    out.push_back(std::move(s));
  }
  return out;
}

Tensor batch_images(const std::vector<FaceSample>& samples, std::span<const int> indices) {
  if (indices.empty()) throw std::invalid_argument("batch_images: empty selection");
  const Eigen::MatrixXd& first = samples.at(indices[0]).image;
  Tensor out(static_cast<int>(indices.size()), 1, static_cast<int>(first.rows()),
             static_cast<int>(first.cols()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Eigen::MatrixXd& img = samples.at(indices[i]).image;
    if (img.rows() != out.h || img.cols() != out.w) {
      throw std::invalid_argument("batch_images: images differ in size");
    }
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out.data.data() + i * out.sample_size(), out.h, out.w) = img;
  }
  return out;
}

}  // namespace vislayer
