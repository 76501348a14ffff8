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
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vislayer/camera.hpp"
#include "vislayer/gradcheck.hpp"
#include "vislayer/visualization_layer.hpp"

namespace vislayer {
namespace {

using testing::small_model;

ParamVector sample_params(const ShapeModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_params(m, 64, rng);
}

TEST(ProjectAll, IdentityCameraReturnsFirstTwoRowsOfMeanShape) {
  const ShapeModel& m = small_model();
  ParamVector p = ParamVector::zeros(m.num_shape_params());
  p.camera = CameraMatrix::frontal(1.0, 0.0, 0.0);
  EXPECT_EQ(project_all(m, p), m.mean_shape().topRows<2>());
}

TEST(ProjectAll, DoublingRotationRowsDoublesCentredProjection) {
  const ShapeModel& m = small_model();
  const ParamVector p = sample_params(m, 3);
  ParamVector q = p;
  for (int k : {0, 1, 2, 4, 5, 6}) q.camera[k] *= 2.0;
  Eigen::Matrix2Xd a = project_all(m, p);
  Eigen::Matrix2Xd b = project_all(m, q);
  a.colwise() -= Eigen::Vector2d(p.camera.tx(), p.camera.ty());
  b.colwise() -= Eigen::Vector2d(q.camera.tx(), q.camera.ty());
  EXPECT_LE((b - 2.0 * a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectAll, MatchesScalarOracle) {
  const ShapeModel m = generate_synthetic_model(5, 100, 4, 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ParamVector p = sample_params(m, seed);
    const Eigen::Matrix2Xd oracle =
        testing::scalar_project(testing::scalar_compose(m, p.shape), p.camera);
    EXPECT_LE((project_all(m, p) - oracle).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ProjectAll, RejectsWrongShapeLength) {
  const ShapeModel& m = small_model();
  ParamVector p = ParamVector::zeros(m.num_shape_params() + 2);
  EXPECT_THROW(project_all(m, p), std::invalid_argument);
}

TEST(ProjectAll, SuperpositionInShapeAndCamera) {
  const ShapeModel& m = small_model();
  const ParamVector p1 = sample_params(m, 10);
  const ParamVector p2 = sample_params(m, 11);
  // Affine in p for a fixed camera.
  ParamVector mix = p1;
  mix.shape = 0.3 * p1.shape + 0.7 * p2.shape;
  ParamVector b = p1;
  b.shape = p2.shape;
  EXPECT_LE((project_all(m, mix) - (0.3 * project_all(m, p1) + 0.7 * project_all(m, b))).cwiseAbs().maxCoeff(),
            1e-10);
  // Linear in M for fixed p.
  ParamVector c1 = p1, c2 = p1, sum = p1;
  c2.camera = p2.camera;
  for (int k = 0; k < kCameraParams; ++k) sum.camera[k] = 2.0 * p1.camera[k] - 1.5 * p2.camera[k];
  EXPECT_LE((project_all(m, sum) - (2.0 * project_all(m, c1) - 1.5 * project_all(m, c2))).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(ProjectLandmarks, EqualsProjectAllAtLandmarkColumns) {
  const ShapeModel& m = small_model();
  const ParamVector p = sample_params(m, 4);
  const Eigen::Matrix2Xd all = project_all(m, p);
  const LandmarkSet l = project_landmarks(m, p);
  ASSERT_EQ(l.size(), m.num_landmarks());
  for (int k = 0; k < l.size(); ++k) {
    EXPECT_EQ(l.points.col(k), all.col(m.landmark_indices()[k]));
  }
}

TEST(ProjectLandmarks, ZeroCameraPutsEverythingAtOrigin) {
  const ShapeModel& m = small_model();
  ParamVector p = ParamVector::zeros(m.num_shape_params());
  p.shape.setConstant(0.5);
  EXPECT_EQ(project_landmarks(m, p).points, Eigen::Matrix2Xd::Zero(2, m.num_landmarks()));
}

TEST(ProjectionJacobian, MatchesFiniteDifferences) {
  const ShapeModel& m = small_model();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ParamVector p = sample_params(m, seed);
    const ProjectionJacobian j = projection_jacobian(m, p);
    ASSERT_EQ(j.jacobian.rows(), 2 * m.num_vertices());
    ASSERT_EQ(j.jacobian.cols(), p.size());
    const Eigen::VectorXd x = p.flat();
    const double scale = j.jacobian.cwiseAbs().maxCoeff();
    for (int row = 0; row < j.jacobian.rows(); row += 7) {
      auto f = [&](const Eigen::VectorXd& v) {
        return project_all(m, ParamVector::from_flat(v))(row % 2, row / 2);
      };
      const Eigen::VectorXd numeric = testing::numeric_gradient(f, x, 1e-5);
      EXPECT_LE(testing::max_relative_error(j.jacobian.row(row).transpose(), numeric, 1e-6 * scale), 1e-6)
          << "seed " << seed << " row " << row;
    }
  }
}

TEST(ProjectionJacobian, SubsetRowsMatchFullJacobian) {
  const ShapeModel& m = small_model();
  const ParamVector p = sample_params(m, 2);
  const ProjectionJacobian full = projection_jacobian(m, p);
  const std::vector<int> subset = {5, 0, 17};
  const ProjectionJacobian part = projection_jacobian(m, p, subset);
  for (std::size_t k = 0; k < subset.size(); ++k) {
    EXPECT_EQ(part.jacobian.row(2 * k), full.jacobian.row(2 * subset[k]));
    EXPECT_EQ(part.jacobian.row(2 * k + 1), full.jacobian.row(2 * subset[k] + 1));
  }
}

TEST(ProjectionJacobian, XDoesNotDependOnM8) {
  const ShapeModel& m = small_model();
  const ProjectionJacobian j = projection_jacobian(m, sample_params(m, 8));
  for (int q = 0; q < m.num_vertices(); ++q) {
    EXPECT_EQ(j.jacobian(2 * q, 7), 0.0);
    EXPECT_EQ(j.jacobian(2 * q + 1, 3), 0.0);
    EXPECT_EQ(j.jacobian(2 * q, 3), 1.0);
    EXPECT_EQ(j.jacobian(2 * q + 1, 7), 1.0);
  }
}

TEST(ProjectionJacobian, ShapeGradientOfXVanishesWhenM1IsZero) {
  const ShapeModel& m = small_model();
  ParamVector p = sample_params(m, 9);
  p.camera[0] = p.camera[1] = p.camera[2] = 0.0;
  const ProjectionJacobian j = projection_jacobian(m, p);
  for (int q = 0; q < m.num_vertices(); ++q) {
    EXPECT_EQ(j.jacobian.row(2 * q).tail(m.num_shape_params()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(ProjectionJacobian, RejectsBadVertex) {
  const ShapeModel& m = small_model();
  const std::vector<int> bad = {m.num_vertices()};
  EXPECT_THROW(projection_jacobian(m, sample_params(m, 1), bad), std::invalid_argument);
}

TEST(LandmarkVisibility, FrontalPoseSeesFrontFacingLandmarks) {
  const ShapeModel& m = testing::default_model();
  ParamVector p = ParamVector::zeros(m.num_shape_params());
  p.camera = CameraMatrix::frontal(20.0, 32.0, 32.0);
  const std::vector<bool> v = landmark_visibility(m, p);
  for (int k = 0; k < m.num_landmarks(); ++k) {
    const bool front = m.mean_normals()(2, m.landmark_indices()[k]) > 0.0;
    EXPECT_EQ(v[k], front) << "landmark " << k;
  }
}

TEST(LandmarkVisibility, NegatingM1FlipsStrictlyFrontFacingLandmarks) {
  const ShapeModel& m = testing::default_model();
  const ParamVector p = sample_params(m, 21);
  ParamVector q = p;
  q.camera[0] = -q.camera[0];
  q.camera[1] = -q.camera[1];
  q.camera[2] = -q.camera[2];
  const Eigen::VectorXd g = testing::scalar_frontability(m, p.camera);
  const Eigen::VectorXd g_neg = testing::scalar_frontability(m, q.camera);
  const std::vector<bool> a = landmark_visibility(m, p);
  const std::vector<bool> b = landmark_visibility(m, q);
  int checked = 0;
  for (int k = 0; k < m.num_landmarks(); ++k) {
    const int idx = m.landmark_indices()[k];
    if (g[idx] > 0.0) {
      EXPECT_TRUE(a[k]);
      EXPECT_FALSE(b[k]);
      ++checked;
    } else if (g_neg[idx] > 0.0) {
      EXPECT_FALSE(a[k]);
      EXPECT_TRUE(b[k]);
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(LandmarkVisibility, ZeroFrontabilityIsInvisible) {
  // Camera looking along +x: m1 x m2 = (0,1,0) x (0,0,1) = (1,0,0). Normals of
  // the front surface with zero x-component give g = 0 exactly.
  const ShapeModel& m = testing::default_model();
  ParamVector p = ParamVector::zeros(m.num_shape_params());
  CameraMatrix::Matrix mat;
  mat << 0, 10, 0, 32, 0, 0, 10, 32;
  p.camera = CameraMatrix(mat);
  const Eigen::VectorXd g = frontability(m, p.camera);
  const std::vector<bool> v = landmark_visibility(m, p);
  for (int k = 0; k < m.num_landmarks(); ++k) {
    EXPECT_EQ(v[k], g[m.landmark_indices()[k]] > 0.0);
    if (g[m.landmark_indices()[k]] == 0.0) EXPECT_FALSE(v[k]);
  }
}

TEST(CameraMatrix, FlatIndexIsRowMajor) {
  CameraMatrix::Matrix mat;
  mat << 1, 2, 3, 4, 5, 6, 7, 8;
  const CameraMatrix c(mat);
  for (int k = 0; k < kCameraParams; ++k) EXPECT_EQ(c[k], k + 1.0);
  EXPECT_EQ(c.row1(), Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(c.row2(), Eigen::Vector3d(5, 6, 7));
  EXPECT_EQ(c.tx(), 4.0);
  EXPECT_EQ(c.ty(), 8.0);
}

TEST(CameraMatrix, WeakPerspectiveCheck) {
  EXPECT_TRUE(CameraMatrix::frontal(3.0, 1.0, 2.0).is_weak_perspective());
  CameraMatrix::Matrix mat;
  mat << 1, 0.5, 0, 0, 0, 1, 0, 0;
  EXPECT_FALSE(CameraMatrix(mat).is_weak_perspective());
  EXPECT_FALSE(CameraMatrix().is_weak_perspective());
}

TEST(ParamVector, FlatRoundTripAndUpdate) {
  ParamVector p = sample_params(small_model(), 5);
  const Eigen::VectorXd x = p.flat();
  ASSERT_EQ(x.size(), 8 + small_model().num_shape_params());
  const ParamVector back = ParamVector::from_flat(x);
  EXPECT_EQ(back.flat(), x);
  const Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(x.size(), -1, 1);
  EXPECT_EQ((p + d).flat(), x + d);
  EXPECT_THROW(p + Eigen::VectorXd::Zero(3), std::invalid_argument);
  EXPECT_THROW(ParamVector::from_flat(Eigen::VectorXd::Zero(7)), std::invalid_argument);
}

TEST(BoundingBox, IntersectionOverUnion) {
  const BoundingBox a{0, 0, 10, 10};
  EXPECT_DOUBLE_EQ(intersection_over_union(a, a), 1.0);
  EXPECT_DOUBLE_EQ(intersection_over_union(a, {5, 0, 10, 10}), 50.0 / 150.0);
  EXPECT_DOUBLE_EQ(intersection_over_union(a, {20, 20, 5, 5}), 0.0);
}

}  // namespace
}  // namespace vislayer
