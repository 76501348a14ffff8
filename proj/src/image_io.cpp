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
#include "vislayer/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "vislayer/file_util.hpp"

namespace vislayer {

namespace {

std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

Gray8 quantize(const Eigen::MatrixXd& image, ImageRange* range) {
  if (!image.allFinite()) throw std::invalid_argument("quantize: image has non-finite values");
  Gray8 out;
  out.width = static_cast<int>(image.cols());
  out.height = static_cast<int>(image.rows());
  out.pixels.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  ImageRange r;
  if (image.size() > 0) {
    r.min = image.minCoeff();
    r.max = image.maxCoeff();
  }
  const double span = r.max - r.min;
  if (span > 0.0) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        const double v = std::round(255.0 * (image(y, x) - r.min) / span);
        out.pixels[static_cast<std::size_t>(y) * out.width + x] = static_cast<std::uint8_t>(v);
      }
    }
  }
  if (range != nullptr) *range = r;
  return out;
}

std::string encode_pgm(const Gray8& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

Gray8 decode_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("decode_pgm: not a binary PGM (P5) file");
  auto next_int = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    int v = 0;
    if (!(in >> v)) throw std::runtime_error("decode_pgm: malformed header");
    return v;
  };
  Gray8 out;
  out.width = next_int();
  out.height = next_int();
  const int maxval = next_int();
  if (out.width <= 0 || out.height <= 0 || maxval != 255) {
    throw std::runtime_error("decode_pgm: unsupported dimensions or depth");
  }
  in.get();
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
  in.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(out.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(out.pixels.size())) {
    throw std::runtime_error("decode_pgm: truncated pixel data");
  }
  return out;
}

std::string encode_png(const Gray8& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("encode_png: ") + png.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("encode_png: ") + png.message);
  }
  out.resize(size);
  return out;
}

Gray8 decode_png(const std::string& bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw std::runtime_error(std::string("decode_png: ") + png.message);
  }
  png.format = PNG_FORMAT_GRAY;
  Gray8 out;
  out.width = static_cast<int>(png.width);
  out.height = static_cast<int>(png.height);
  out.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw std::runtime_error(std::string("decode_png: ") + png.message);
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  return std::filesystem::path(image_path.string() + ".range.txt");
}

ImageRange write_image(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
  ImageRange range;
  const Gray8 gray = quantize(image, &range);
  const std::string ext = lowercase_extension(path);
  if (ext == ".pgm") {
    write_file_atomic(path, encode_pgm(gray));
  } else if (ext == ".png") {
    write_file_atomic(path, encode_png(gray));
  } else {
    throw std::invalid_argument("write_image: unsupported extension '" + ext + "' for " +
                                path.string() + " (use .pgm or .png)");
  }
  std::ostringstream side;
  side << std::setprecision(17) << "min: " << range.min << "\nmax: " << range.max << "\n";
  write_file_atomic(sidecar_path(path), side.str());
  return range;
}

Gray8 read_image(const std::filesystem::path& path) {
  const std::string ext = lowercase_extension(path);
  const std::string bytes = read_file(path);
  if (ext == ".pgm") return decode_pgm(bytes);
  if (ext == ".png") return decode_png(bytes);
  throw std::invalid_argument("read_image: unsupported extension '" + ext + "'");
}

}  // namespace vislayer
