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

#include <filesystem>
#include <stdexcept>
#include <string>

#include "vislayer/morphable_model.hpp"

namespace vislayer {

inline constexpr int kModelFormatVersion = 1;

// Raised for unreadable, malformed or version-mismatched model files.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON document; see README for the field list. Normals and masks are not
// stored, they are recomputed by the ShapeModel constructor.
std::string model_to_json(const ShapeModel& model);
ShapeModel model_from_json(const std::string& text);

void save_model(const ShapeModel& model, const std::filesystem::path& path);
ShapeModel load_model(const std::filesystem::path& path);

}  // namespace vislayer
