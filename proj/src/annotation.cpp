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
#include "vislayer/annotation.hpp"

#include <json.hpp>

#include "vislayer/file_util.hpp"

namespace vislayer {

namespace {

using Json = nlohmann::ordered_json;

const Json& require(const Json& doc, const char* key) {
  if (!doc.contains(key)) throw AnnotationError(std::string("annotation: missing key '") + key + "'");
  return doc.at(key);
}

}  // namespace

std::string annotation_to_json(const Annotation& a) {
  Json doc;
  if (!a.image.empty()) doc["image"] = a.image;
  doc["bbox"] = {a.bbox.x, a.bbox.y, a.bbox.width, a.bbox.height};
  Json points = Json::array();
  for (int k = 0; k < a.landmarks.size(); ++k) {
    points.push_back({a.landmarks.points(0, k), a.landmarks.points(1, k)});
  }
  doc["landmarks"] = points;
  Json vis = Json::array();
  for (bool v : a.landmarks.visible) vis.push_back(v);
  doc["visibility"] = vis;
  if (a.params) {
    Json camera = Json::array();
    for (int k = 0; k < kCameraParams; ++k) camera.push_back(a.params->camera[k]);
    Json shape = Json::array();
    for (Eigen::Index j = 0; j < a.params->shape.size(); ++j) shape.push_back(a.params->shape[j]);
    doc["params"] = {{"camera", camera}, {"shape", shape}};
  }
  return doc.dump(2) + "\n";
}

Annotation annotation_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw AnnotationError(std::string("annotation: parse error: ") + e.what());
  }
  try {
    Annotation a;
    if (doc.contains("image")) a.image = doc.at("image").get<std::string>();
    const Json& bbox = require(doc, "bbox");
    if (!bbox.is_array() || bbox.size() != 4) {
      throw AnnotationError("annotation: 'bbox' must be [x, y, w, h]");
    }
    a.bbox = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
              bbox[3].get<double>()};
    const Json& points = require(doc, "landmarks");
    a.landmarks.points.resize(2, static_cast<Eigen::Index>(points.size()));
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (!points[k].is_array() || points[k].size() != 2) {
        throw AnnotationError("annotation: 'landmarks' entries must be [x, y]");
      }
      a.landmarks.points(0, k) = points[k][0].get<double>();
      a.landmarks.points(1, k) = points[k][1].get<double>();
    }
    if (doc.contains("visibility")) {
      const Json& vis = doc.at("visibility");
      if (vis.size() != points.size()) {
        throw AnnotationError("annotation: 'visibility' length differs from 'landmarks'");
      }
      for (const Json& v : vis) a.landmarks.visible.push_back(v.get<bool>());
    } else {
      a.landmarks.visible.assign(points.size(), true);
    }
    if (doc.contains("params")) {
      const Json& p = doc.at("params");
      const Json& camera = require(p, "camera");
      if (camera.size() != kCameraParams) {
        throw AnnotationError("annotation: 'params.camera' must have 8 entries");
      }
      ParamVector params;
      for (int k = 0; k < kCameraParams; ++k) params.camera[k] = camera[k].get<double>();
      const Json& shape = require(p, "shape");
      params.shape.resize(static_cast<Eigen::Index>(shape.size()));
      for (std::size_t j = 0; j < shape.size(); ++j) params.shape[j] = shape[j].get<double>();
      a.params = params;
    }
    return a;
  } catch (const Json::exception& e) {
    throw AnnotationError(std::string("annotation: wrong value type: ") + e.what());
  }
}

void save_annotation(const Annotation& annotation, const std::filesystem::path& path) {
  write_file_atomic(path, annotation_to_json(annotation));
}

Annotation load_annotation(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw AnnotationError(e.what());
  }
  try {
    return annotation_from_json(text);
  } catch (const AnnotationError& e) {
    throw AnnotationError(path.string() + ": " + e.what());
  }
}

}  // namespace vislayer
