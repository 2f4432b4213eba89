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
#include "ovpl/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>

namespace ovpl {

namespace fs = std::filesystem;

ImageBuffer make_image(int width, int height, uint8_t b, uint8_t g,
                       uint8_t r) {
  ImageBuffer img;
  img.width = width;
  img.height = height;
  img.data.resize(static_cast<size_t>(width) * height * 3);
  for (size_t i = 0; i < img.data.size(); i += 3) {
    img.data[i] = b;
    img.data[i + 1] = g;
    img.data[i + 2] = r;
  }
  return img;
}

ImageBuffer read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw ImageError("unsupported PPM header in " + path.string());
  }
  in.get();  // single whitespace after maxval
  ImageBuffer img;
  img.width = w;
  img.height = h;
  img.data.resize(static_cast<size_t>(w) * h * 3);
  std::vector<char> rgb(img.data.size());
  in.read(rgb.data(), static_cast<std::streamsize>(rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(rgb.size())) {
    throw ImageError("truncated PPM data in " + path.string());
  }
  for (size_t i = 0; i < img.data.size(); i += 3) {
    img.data[i] = static_cast<uint8_t>(rgb[i + 2]);      // B
    img.data[i + 1] = static_cast<uint8_t>(rgb[i + 1]);  // G
    img.data[i + 2] = static_cast<uint8_t>(rgb[i]);      // R
  }
  return img;
}

void write_ppm(const ImageBuffer& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError("cannot write " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<char> rgb(img.data.size());
  for (size_t i = 0; i < img.data.size(); i += 3) {
    rgb[i] = static_cast<char>(img.data[i + 2]);
    rgb[i + 1] = static_cast<char>(img.data[i + 1]);
    rgb[i + 2] = static_cast<char>(img.data[i]);
  }
  out.write(rgb.data(), static_cast<std::streamsize>(rgb.size()));
}

namespace {

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

void png_vector_write(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void encode_png_impl(const ImageBuffer& img, png_structp png, png_infop info) {
  if (setjmp(png_jmpbuf(png))) throw ImageError("PNG encode failed");
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    const uint8_t* src = img.pixel(0, y);
    for (int x = 0; x < img.width; ++x) {
      row[x * 3] = src[x * 3 + 2];
      row[x * 3 + 1] = src[x * 3 + 1];
      row[x * 3 + 2] = src[x * 3];
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

}  // namespace

ImageBuffer read_png(const fs::path& path) {
  PngReadCloser c;
  c.fp = std::fopen(path.c_str(), "rb");
  if (!c.fp) throw ImageError("cannot open " + path.string());
  c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
  c.info = png_create_info_struct(c.png);
  if (!c.png || !c.info) throw ImageError("libpng init failed");
  if (setjmp(png_jmpbuf(c.png))) {
    throw ImageError("PNG decode failed for " + path.string());
  }
  png_init_io(c.png, c.fp);
  png_read_info(c.png, c.info);
  png_set_expand(c.png);
  png_set_strip_16(c.png);
  png_set_strip_alpha(c.png);
  png_set_gray_to_rgb(c.png);
  png_read_update_info(c.png, c.info);
  const int w = static_cast<int>(png_get_image_width(c.png, c.info));
  const int h = static_cast<int>(png_get_image_height(c.png, c.info));
  ImageBuffer img;
  img.width = w;
  img.height = h;
  img.data.resize(static_cast<size_t>(w) * h * 3);
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(c.png, row.data(), nullptr);
    uint8_t* dst = img.pixel(0, y);
    for (int x = 0; x < w; ++x) {
      dst[x * 3] = row[x * 3 + 2];
      dst[x * 3 + 1] = row[x * 3 + 1];
      dst[x * 3 + 2] = row[x * 3];
    }
  }
  return img;
}

std::vector<uint8_t> encode_png(const ImageBuffer& img) {
  PngWriteCloser c;
  c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                  nullptr);
  c.info = png_create_info_struct(c.png);
  if (!c.png || !c.info) throw ImageError("libpng init failed");
  std::vector<uint8_t> out;
  png_set_write_fn(c.png, &out, png_vector_write, nullptr);
  encode_png_impl(img, c.png, c.info);
  return out;
}

void write_png(const ImageBuffer& img, const fs::path& path) {
  const std::vector<uint8_t> bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

ImageBuffer read_image(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw ImageError("unsupported image extension: " + path.string());
}

}  // namespace ovpl
