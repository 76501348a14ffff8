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
#include "vislayer/model_io.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vislayer/file_util.hpp"

namespace vislayer {

namespace {

using Json = nlohmann::ordered_json;

// Order in which sections are written; also used to name the first missing
// section of a truncated file.
constexpr std::array<const char*, 14> kSections = {
    "version",          "Q",          "n_id",           "n_exp",
    "mean_shape",       "bases_id",   "bases_exp",      "basis_stddev_id",
    "basis_stddev_exp", "triangles",  "landmark_indices", "nose_tip_index",
    "sigma_n",          "mask2_centers"};

std::vector<double> flatten_rows(const Eigen::Matrix3Xd& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (int r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::Matrix3Xd unflatten_rows(const std::vector<double>& v, Eigen::Index q,
                                const std::string& what) {
  if (static_cast<Eigen::Index>(v.size()) != 3 * q) {
    throw ModelFormatError("section '" + what + "' has " + std::to_string(v.size()) +
                           " values, expected 3*Q = " + std::to_string(3 * q));
  }
  Eigen::Matrix3Xd m(3, q);
  for (int r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < q; ++c) m(r, c) = v[r * q + c];
  }
  return m;
}

const Json& require(const Json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ModelFormatError(std::string("missing section '") + key + "'");
  return *it;
}

std::vector<Eigen::Matrix3Xd> read_bases(const Json& doc, const char* key, Eigen::Index q,
                                         int expected) {
  const Json& arr = require(doc, key);
  if (!arr.is_array() || static_cast<int>(arr.size()) != expected) {
    throw ModelFormatError(std::string("section '") + key + "' must list " +
                           std::to_string(expected) + " bases");
  }
  std::vector<Eigen::Matrix3Xd> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    out.push_back(unflatten_rows(arr[k].get<std::vector<double>>(), q,
                                 std::string(key) + "[" + std::to_string(k) + "]"));
  }
  return out;
}

Eigen::VectorXd read_vector(const Json& doc, const char* key) {
  const auto v = require(doc, key).get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string model_to_json(const ShapeModel& model) {
  const ShapeModelData& d = model.data();
  Json doc;
  doc["version"] = kModelFormatVersion;
  doc["Q"] = model.num_vertices();
  doc["n_id"] = model.num_identity();
  doc["n_exp"] = model.num_expression();
  doc["mean_shape"] = flatten_rows(d.mean_shape);
  Json id = Json::array();
  for (const auto& b : d.identity_bases) id.push_back(flatten_rows(b));
  doc["bases_id"] = std::move(id);
  Json ex = Json::array();
  for (const auto& b : d.expression_bases) ex.push_back(flatten_rows(b));
  doc["bases_exp"] = std::move(ex);
  doc["basis_stddev_id"] =
      std::vector<double>(d.identity_stddev.data(), d.identity_stddev.data() + d.identity_stddev.size());
  doc["basis_stddev_exp"] = std::vector<double>(
      d.expression_stddev.data(), d.expression_stddev.data() + d.expression_stddev.size());
  Json tris = Json::array();
  for (const auto& t : d.triangles) tris.push_back({t[0], t[1], t[2]});
  doc["triangles"] = std::move(tris);
  doc["landmark_indices"] = d.landmark_indices;
  doc["nose_tip_index"] = d.nose_tip_index;
  doc["sigma_n"] = model.sigma_n();
  doc["mask2_centers"] = d.mask2_centers;
  return doc.dump(1) + "\n";
}

ShapeModel model_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // A truncated document cannot be parsed at all; report the first section
    // whose key never made it into the text.
    for (const char* key : kSections) {
      if (text.find(std::string("\"") + key + "\"") == std::string::npos) {
        throw ModelFormatError(std::string("truncated model file: missing section '") + key +
                               "' (" + e.what() + ")");
      }
    }
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  }
  if (!doc.is_object()) throw ModelFormatError("model file must be a JSON object");

  try {
    const int version = require(doc, "version").get<int>();
    if (version != kModelFormatVersion) {
      throw ModelFormatError("unsupported model file version " + std::to_string(version) +
                             " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    const Eigen::Index q = require(doc, "Q").get<Eigen::Index>();
    const int n_id = require(doc, "n_id").get<int>();
    const int n_exp = require(doc, "n_exp").get<int>();
    if (q <= 0 || n_id < 0 || n_exp < 0) throw ModelFormatError("invalid Q/n_id/n_exp");

    ShapeModelData d;
    d.mean_shape =
        unflatten_rows(require(doc, "mean_shape").get<std::vector<double>>(), q, "mean_shape");
    d.identity_bases = read_bases(doc, "bases_id", q, n_id);
    d.expression_bases = read_bases(doc, "bases_exp", q, n_exp);
    d.identity_stddev = read_vector(doc, "basis_stddev_id");
    d.expression_stddev = read_vector(doc, "basis_stddev_exp");
    for (const auto& t : require(doc, "triangles")) {
      const auto tri = t.get<std::vector<int>>();
      if (tri.size() != 3) throw ModelFormatError("triangle entries must have 3 indices");
      d.triangles.push_back({tri[0], tri[1], tri[2]});
    }
    d.landmark_indices = require(doc, "landmark_indices").get<std::vector<int>>();
    d.nose_tip_index = require(doc, "nose_tip_index").get<int>();
    d.sigma_n = require(doc, "sigma_n").get<double>();
    if (auto it = doc.find("mask2_centers"); it != doc.end()) {
      d.mask2_centers = it->get<std::vector<int>>();
    }
    try {
      return ShapeModel(std::move(d));
    } catch (const std::invalid_argument& e) {
      throw ModelFormatError(std::string("model validation failed: ") + e.what());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const ShapeModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model));
}

ShapeModel load_model(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ModelFormatError(e.what());
  }
  try {
    return model_from_json(text);
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(path.string() + ": " + e.what());
  }
}

}  // namespace vislayer
