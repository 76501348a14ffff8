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
#include "vislayer/config_json.hpp"

#include <functional>
#include <map>

namespace vislayer {

namespace {

std::string block_inputs_name(BlockInputs inputs) {
  switch (inputs) {
    case BlockInputs::kImageFeaturesVisualization:
      return "IFV";
    case BlockInputs::kFeaturesVisualization:
      return "FV";
    case BlockInputs::kImageVisualization:
      return "IV";
  }
  return "IFV";
}

BlockInputs parse_block_inputs(const std::string& name, const std::string& key) {
  if (name == "IFV") return BlockInputs::kImageFeaturesVisualization;
  if (name == "FV") return BlockInputs::kFeaturesVisualization;
  if (name == "IV") return BlockInputs::kImageVisualization;
  throw ConfigError(key + ": expected one of IFV, FV, IV, got '" + name + "'");
}

using Setter = std::function<void(const Json&, const std::string&)>;

// Applies `setters` to the members of object `j`; rejects unknown keys and
// rewraps type errors with the key path.
void apply(const Json& j, const std::string& where, const std::map<std::string, Setter>& setters) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = where + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + path + "'");
    try {
      it->second(value, path);
    } catch (const Json::exception& e) {
      throw ConfigError(path + ": wrong value type (" + e.what() + ")");
    }
  }
}

template <typename T>
Setter field(T& target) {
  return [&target](const Json& v, const std::string&) { target = v.get<T>(); };
}

}  // namespace

std::string mask_name(MaskKind kind) {
  switch (kind) {
    case MaskKind::kNoseTip:
      return "1";
    case MaskKind::kFivePoint:
      return "2";
    case MaskKind::kNone:
      return "none";
  }
  return "1";
}

MaskKind parse_mask(const std::string& name) {
  if (name == "1" || name == "nose") return MaskKind::kNoseTip;
  if (name == "2" || name == "five") return MaskKind::kFivePoint;
  if (name == "none") return MaskKind::kNone;
  throw ConfigError("mask: expected 1, 2 or none, got '" + name + "'");
}

Json to_json(const RasterConfig& c) {
  return {{"width", c.width},
          {"height", c.height},
          {"sigma", c.sigma},
          {"support_radius", c.support_radius},
          {"background", c.background_value},
          {"mask", mask_name(c.mask)}};
}

void update_from_json(const Json& j, RasterConfig& out, const std::string& where) {
  apply(j, where,
        {{"width", field(out.width)},
         {"height", field(out.height)},
         {"sigma", field(out.sigma)},
         {"support_radius", field(out.support_radius)},
         {"background", field(out.background_value)},
         {"mask", [&](const Json& v, const std::string& key) {
            try {
              out.mask = parse_mask(v.get<std::string>());
            } catch (const ConfigError& e) {
              throw ConfigError(key + ": " + e.what());
            }
          }}});
}

Json to_json(const BlockConfig& c) {
  Json filters = Json::array();
  for (const auto& block : c.filters) {
    Json b = Json::array();
    for (const ConvSpec& s : block) b.push_back({s.filters, s.kernel});
    filters.push_back(b);
  }
  Json losses = Json::array();
  for (BlockLoss l : c.loss_kinds) losses.push_back(l == BlockLoss::kParameter ? "param" : "landmark");
  return {{"n_blocks", c.n_blocks},
          {"convs_per_block", c.convs_per_block},
          {"image_size", c.image_size},
          {"filters", filters},
          {"fc_sizes", {c.fc_sizes[0], c.fc_sizes[1]}},
          {"dropout", c.dropout},
          {"inputs", block_inputs_name(c.inputs)},
          {"loss_kinds", losses},
          {"loss_weights", c.loss_weights},
          {"raster", to_json(c.raster)}};
}

void update_from_json(const Json& j, BlockConfig& out, const std::string& where) {
  apply(j, where,
        {{"n_blocks", field(out.n_blocks)},
         {"convs_per_block", field(out.convs_per_block)},
         {"image_size", field(out.image_size)},
         {"filters",
          [&](const Json& v, const std::string& key) {
            out.filters.clear();
            for (const Json& block : v) {
              std::vector<ConvSpec> specs;
              for (const Json& s : block) {
                if (!s.is_array() || s.size() != 2) {
                  throw ConfigError(key + ": each filter spec must be [count, kernel]");
                }
                specs.push_back({s[0].get<int>(), s[1].get<int>()});
              }
              out.filters.push_back(std::move(specs));
            }
          }},
         {"fc_sizes",
          [&](const Json& v, const std::string& key) {
            if (!v.is_array() || v.size() != 2) throw ConfigError(key + ": expected two integers");
            out.fc_sizes = {v[0].get<int>(), v[1].get<int>()};
          }},
         {"dropout", field(out.dropout)},
         {"inputs",
          [&](const Json& v, const std::string& key) {
            out.inputs = parse_block_inputs(v.get<std::string>(), key);
          }},
         {"loss_kinds",
          [&](const Json& v, const std::string& key) {
            out.loss_kinds.clear();
            for (const Json& s : v) {
              const std::string name = s.get<std::string>();
              if (name == "param") {
                out.loss_kinds.push_back(BlockLoss::kParameter);
              } else if (name == "landmark") {
                out.loss_kinds.push_back(BlockLoss::kLandmark);
              } else {
                throw ConfigError(key + ": expected 'param' or 'landmark', got '" + name + "'");
              }
            }
          }},
         {"loss_weights", field(out.loss_weights)},
         {"raster", [&](const Json& v, const std::string& key) {
            update_from_json(v, out.raster, key);
          }}});
}

Json to_json(const TrainOptions& o) {
  return {{"epochs", o.epochs},
          {"batch_size", o.batch_size},
          {"learning_rate", o.learning_rate},
          {"lr_decay", o.lr_decay},
          {"momentum", o.momentum},
          {"weight_decay", o.weight_decay},
          {"grad_clip", o.grad_clip},
          {"seed", o.seed},
          {"detach_parameter_path", o.backward.detach_parameter_path},
          {"detach_visualization", o.backward.detach_visualization},
          {"constant_visualization", o.constant_visualization},
          {"jitter_initialization", o.jitter_initialization},
          {"max_shift", o.max_shift},
          {"eval_batch", o.eval_batch}};
}

void update_from_json(const Json& j, TrainOptions& out, const std::string& where) {
  apply(j, where,
        {{"epochs", field(out.epochs)},
         {"batch_size", field(out.batch_size)},
         {"learning_rate", field(out.learning_rate)},
         {"lr_decay", field(out.lr_decay)},
         {"momentum", field(out.momentum)},
         {"weight_decay", field(out.weight_decay)},
         {"grad_clip", field(out.grad_clip)},
         {"seed", field(out.seed)},
         {"detach_parameter_path", field(out.backward.detach_parameter_path)},
         {"detach_visualization", field(out.backward.detach_visualization)},
         {"constant_visualization", field(out.constant_visualization)},
         {"jitter_initialization", field(out.jitter_initialization)},
         {"max_shift", field(out.max_shift)},
         {"eval_batch", field(out.eval_batch)}});
}

Json to_json(const DatasetOptions& o) {
  return {{"seed", o.seed},
          {"count", o.count},
          {"image_size", o.image_size},
          {"max_yaw_deg", o.max_yaw_deg},
          {"max_pitch_deg", o.max_pitch_deg},
          {"max_roll_deg", o.max_roll_deg},
          {"scale_fraction", o.scale_fraction},
          {"scale_jitter", o.scale_jitter},
          {"center_jitter", o.center_jitter},
          {"shape_sigma", o.shape_sigma},
          {"min_visible_landmarks", o.min_visible_landmarks},
          {"photo", to_json(o.photo)}};
}

void update_from_json(const Json& j, DatasetOptions& out, const std::string& where) {
  apply(j, where,
        {{"seed", field(out.seed)},
         {"count", field(out.count)},
         {"image_size", field(out.image_size)},
         {"max_yaw_deg", field(out.max_yaw_deg)},
         {"max_pitch_deg", field(out.max_pitch_deg)},
         {"max_roll_deg", field(out.max_roll_deg)},
         {"scale_fraction", field(out.scale_fraction)},
         {"scale_jitter", field(out.scale_jitter)},
         {"center_jitter", field(out.center_jitter)},
         {"shape_sigma", field(out.shape_sigma)},
         {"min_visible_landmarks", field(out.min_visible_landmarks)},
         {"photo", [&](const Json& v, const std::string& key) {
            update_from_json(v, out.photo, key);
          }}});
}

}  // namespace vislayer
