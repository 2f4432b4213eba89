/* Copyright 2026 The ovpl Authors. All Rights Reserved.

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
#include <stdexcept>
#include <string>
#include <vector>

namespace ovpl {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 3-channel interleaved raster in B,G,R order, row-major, 8 bits per channel.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // size width*height*3

  uint8_t* pixel(int x, int y) {
    return data.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  const uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  bool operator==(const ImageBuffer&) const = default;
};

ImageBuffer make_image(int width, int height, uint8_t b = 0, uint8_t g = 0,
                       uint8_t r = 0);

// Binary PPM (P6). Stored RGB on disk, converted to/from BGR in memory.
ImageBuffer read_ppm(const std::filesystem::path& path);
void write_ppm(const ImageBuffer& img, const std::filesystem::path& path);

// PNG via libpng, 8-bit RGB/RGBA (alpha dropped on read).
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const ImageBuffer& img, const std::filesystem::path& path);
std::vector<uint8_t> encode_png(const ImageBuffer& img);

// Dispatches on extension (.png, .ppm).
ImageBuffer read_image(const std::filesystem::path& path);

}  // namespace ovpl
