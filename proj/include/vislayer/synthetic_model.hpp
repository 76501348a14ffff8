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

#include <cstdint>

#include "vislayer/morphable_model.hpp"

namespace vislayer {

struct SyntheticModelOptions {
  std::uint64_t seed = 1;
  int target_vertices = 500;
  int num_identity = 8;
  int num_expression = 4;
};

// Builds a frontal, left-right symmetric ellipsoidal face patch with a nose
// bump, smooth random identity/expression bases and a fixed set of semantic
// landmarks. The vertex grid is sized so that Q >= target_vertices (the grid
// needs an odd column count for the symmetry axis, so Q is rarely exact).
// Deterministic for a given seed.
ShapeModel generate_synthetic_model(const SyntheticModelOptions& options);

inline ShapeModel generate_synthetic_model(std::uint64_t seed, int target_vertices,
                                           int num_identity, int num_expression) {
  return generate_synthetic_model({seed, target_vertices, num_identity, num_expression});
}

}  // namespace vislayer
