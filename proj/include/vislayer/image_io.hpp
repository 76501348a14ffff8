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
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vislayer {

// 8-bit grayscale raster, row-major.
struct Gray8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

// Value range that was mapped to [0, 255].
struct ImageRange {
  double min = 0.0;
  double max = 0.0;
};

// Affine map of [min, max] of `image` to [0, 255] (a constant image maps to 0).
Gray8 quantize(const Eigen::MatrixXd& image, ImageRange* range = nullptr);

std::string encode_pgm(const Gray8& image);
Gray8 decode_pgm(const std::string& bytes);
std::string encode_png(const Gray8& image);
Gray8 decode_png(const std::string& bytes);

// Writes PGM or PNG depending on the extension (.pgm or .png) and a sidecar
// `<path>.range.txt` holding "min: ..." and "max: ..." lines. Returns the range.
ImageRange write_image(const std::filesystem::path& path, const Eigen::MatrixXd& image);
Gray8 read_image(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

}  // namespace vislayer
