/* Copyright 2026 The EdgeAttNet Authors. All Rights Reserved.

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

#include "edgeattnet/image_io.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace edgeattnet::io {
namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_gray8(const std::filesystem::path& path, int width, int height,
                 const std::vector<std::uint8_t>& bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw ImageIoError("cannot write " + path.string() + ": " + image.message);
  }
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path, int* max_value) {
  const auto bytes = read_bytes(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> void {
    throw ImageIoError(path.string() + ": " + why);
  };
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string out;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
      out.push_back(static_cast<char>(bytes[pos++]));
    }
    return out;
  };
  if (token() != "P5") fail("not a binary PGM (P5)");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    fail("malformed header");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) fail("invalid header values");
  ++pos;  // single whitespace byte after maxval
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(width) * height * bpp;
  if (bytes.size() < pos + need) fail("truncated pixel data");
  GrayImage img(width, height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const unsigned char* p = bytes.data() + pos + i * bpp;
    img.pixels[i] = bpp == 2 ? static_cast<double>((p[0] << 8) | p[1]) : p[0];
  }
  if (max_value != nullptr) *max_value = maxval;
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  for (double v : image.pixels) out.put(static_cast<char>(to_byte(v)));
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw ImageIoError("cannot read " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    throw ImageIoError("cannot decode " + path.string() + ": " + image.message);
  }
  GrayImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  std::copy(buffer.begin(), buffer.end(), img.pixels.begin());
  return img;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<std::uint8_t> bytes(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), bytes.begin(), to_byte);
  write_gray8(path, image.width, image.height, bytes);
}

GrayImage read_image(const std::filesystem::path& path, int* max_value) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path, max_value);
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
    if (max_value != nullptr) *max_value = 255;
    return read_png(path);
  }
  throw ImageIoError(path.string() + ": unsupported image format (expected PGM P5 or PNG)");
}

GrayImage read_unit_image(const std::filesystem::path& path) {
  int max_value = 1;
  GrayImage img = read_image(path, &max_value);
  for (double& v : img.pixels) v /= max_value;
  return img;
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.bits.size());
  std::transform(mask.bits.begin(), mask.bits.end(), bytes.begin(),
                 [](std::uint8_t b) { return static_cast<std::uint8_t>(b ? 255 : 0); });
  write_gray8(path, mask.width, mask.height, bytes);
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  const GrayImage img = read_png(path);
  BinaryMask mask(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) mask.bits[i] = img.pixels[i] > 0.0;
  return mask;
}

void write_rgb_png(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, rgb.data(), 0, nullptr)) {
    throw ImageIoError("cannot write " + path.string() + ": " + image.message);
  }
}

}  // namespace edgeattnet::io
