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

#ifndef EDGEATTNET_IMAGE_IO_H_
#define EDGEATTNET_IMAGE_IO_H_

#include <filesystem>
#include <stdexcept>

#include "edgeattnet/image.h"

namespace edgeattnet::io {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary PGM (P5, 8 or 16 bit). Pixel values are returned unscaled; the
// header's maximum value is stored in *max_value when given.
GrayImage read_pgm(const std::filesystem::path& path, int* max_value = nullptr);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

// PNG, converted to 8-bit grayscale on read. Values are returned in 0..255.
GrayImage read_png(const std::filesystem::path& path);
// Writes values in [0, 1] (clamped) as 8-bit grayscale.
void write_png(const std::filesystem::path& path, const GrayImage& image);

// Dispatches on the file signature. *max_value receives the format's full
// scale (255 for PNG).
GrayImage read_image(const std::filesystem::path& path, int* max_value = nullptr);
// read_image divided by the full scale, so values lie in [0, 1].
GrayImage read_unit_image(const std::filesystem::path& path);

// Masks are stored as 8-bit PNGs holding 0 and 255; any nonzero pixel reads
// back as set.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask_png(const std::filesystem::path& path);

// 8-bit RGB PNG, 3 bytes per pixel.
void write_rgb_png(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb);

}  // namespace edgeattnet::io

#endif  // EDGEATTNET_IMAGE_IO_H_
