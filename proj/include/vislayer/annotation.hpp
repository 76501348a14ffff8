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
#include <optional>
#include <stdexcept>
#include <string>

#include "vislayer/camera.hpp"

namespace vislayer {

// One labelled face. JSON layout:
//   {"image": "...", "bbox": [x, y, w, h], "landmarks": [[x, y], ...],
//    "visibility": [true, ...], "params": {"camera": [8 values], "shape": [...]}}
// "image" and "params" are optional.
struct Annotation {
  std::string image;
  BoundingBox bbox;
  LandmarkSet landmarks;
  std::optional<ParamVector> params;
};

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string annotation_to_json(const Annotation& annotation);
Annotation annotation_from_json(const std::string& text);
void save_annotation(const Annotation& annotation, const std::filesystem::path& path);
Annotation load_annotation(const std::filesystem::path& path);

}  // namespace vislayer
