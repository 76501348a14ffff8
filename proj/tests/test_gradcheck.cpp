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

#include <gtest/gtest.h>

#include "vislayer/gradcheck.hpp"
#include "vislayer/synthetic_model.hpp"

namespace vislayer {
namespace {

TEST(RelativeError, UsesLargerMagnitudeAndFloor) {
  const RelativeError r = relative_error(Eigen::Vector3d(1.0, 2.0, 0.0), Eigen::Vector3d(1.1, 2.0, 1e-9));
  EXPECT_NEAR(r.max_error, 0.1 / 1.1, 1e-15);
  EXPECT_EQ(r.worst_index, 0);
  // Floor = 1e-6 * 2: a 1e-9 discrepancy on a zero entry is 5e-4 relative.
  const RelativeError z = relative_error(Eigen::Vector2d(2.0, 0.0), Eigen::Vector2d(2.0, 1e-9));
  EXPECT_NEAR(z.max_error, 1e-9 / 2e-6, 1e-15);
  EXPECT_EQ(z.worst_index, 1);
}

TEST(CentralDifference, ExactForQuadratics) {
  auto f = [](const Eigen::VectorXd& x) { return 3.0 * x[0] * x[0] - x[0] * x[1] + 2.0 * x[1]; };
  const Eigen::VectorXd g = central_difference(f, Eigen::Vector2d(1.5, -2.0), 1e-4);
  EXPECT_NEAR(g[0], 6.0 * 1.5 + 2.0, 1e-8);
  EXPECT_NEAR(g[1], -1.5 + 2.0, 1e-8);
}

TEST(ParamLabel, NamesCameraAndShapeEntries) {
  EXPECT_EQ(param_label(0), "m1");
  EXPECT_EQ(param_label(7), "m8");
  EXPECT_EQ(param_label(8), "p1");
  EXPECT_EQ(param_label(12), "p5");
}

TEST(Gradcheck, AllCategoriesPassOnDefaults) {
  GradcheckOptions o;
  o.trials = 6;
  for (const CategoryReport& r : run_gradchecks(o)) {
    EXPECT_TRUE(r.passed()) << r.name << " " << r.max_error << " at " << r.worst_label;
    EXPECT_GE(r.worst_index, 0) << r.name;
    EXPECT_FALSE(r.worst_label.empty()) << r.name;
  }
}

TEST(Gradcheck, TrialsAreHonoured) {
  GradcheckOptions o;
  o.trials = 3;
  EXPECT_EQ(check_rasterizer(o).trials, 3);
  EXPECT_EQ(check_projection_jacobian(o).trials, 3);
  o.trials = 5;
  EXPECT_EQ(check_landmark_loss(o).trials, 5);
}

TEST(Gradcheck, RandomParamsAreCentredWeakPerspective) {
  const ShapeModel model = generate_synthetic_model(1, 100, 2, 2);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const ParamVector p = random_params(model, 32, rng);
    const Eigen::Vector2d c = project_all(model, p).rowwise().mean();
    EXPECT_GT(c.x(), 4.0);
    EXPECT_LT(c.x(), 28.0);
    EXPECT_GT(c.y(), 4.0);
    EXPECT_LT(c.y(), 28.0);
  }
}

}  // namespace
}  // namespace vislayer
