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

// JSON conversion of configuration structs. Errors name the offending key.

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "vislayer/dataset.hpp"
#include "vislayer/network.hpp"
#include "vislayer/training.hpp"
#include "vislayer/visualization_layer.hpp"

namespace vislayer {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::ordered_json;

std::string mask_name(MaskKind kind);
MaskKind parse_mask(const std::string& name);  // "1", "2", "none" (also nose, five)

Json to_json(const RasterConfig& c);
Json to_json(const BlockConfig& c);
Json to_json(const TrainOptions& o);
Json to_json(const DatasetOptions& o);

// Keys absent from `j` keep the value already in `out`; unknown keys throw.
void update_from_json(const Json& j, RasterConfig& out, const std::string& where = "raster");
void update_from_json(const Json& j, BlockConfig& out, const std::string& where = "network");
void update_from_json(const Json& j, TrainOptions& out, const std::string& where = "train");
void update_from_json(const Json& j, DatasetOptions& out, const std::string& where = "data");

}  // namespace vislayer
