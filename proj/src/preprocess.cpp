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
#include "ovpl/preprocess.hpp"

#include <cmath>
#include <cstring>

namespace ovpl {

namespace {

struct IntBox {
  int x0, y0, x1, y1;  // half-open
};

IntBox check_box(const ImageBuffer& img, const BBox& box) {
  const int x0 = static_cast<int>(std::lround(box.x));
  const int y0 = static_cast<int>(std::lround(box.y));
  const int x1 = static_cast<int>(std::lround(box.x + box.w));
  const int y1 = static_cast<int>(std::lround(box.y + box.h));
  if (x0 < 0 || y0 < 0 || x1 > img.width || y1 > img.height || x1 <= x0 ||
      y1 <= y0) {
    throw ImageError("crop box out of bounds");
  }
  return {x0, y0, x1, y1};
}

// Reflect-101 index mapping: -1 -> 1, n -> n-2.
int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(int ksize, double sigma) {
  if (ksize < 1 || ksize % 2 == 0) {
    throw ImageError("gaussian_blur: ksize must be odd and >= 1");
  }
  if (sigma <= 0.0) sigma = 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8;
  std::vector<double> k(ksize);
  const int half = ksize / 2;
  double sum = 0.0;
  for (int i = 0; i < ksize; ++i) {
    const double x = i - half;
    k[i] = std::exp(-(x * x) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

ImageBuffer grayscale(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (size_t i = 0; i < img.data.size(); i += 3) {
    const double b = img.data[i], g = img.data[i + 1], r = img.data[i + 2];
    double v = std::round(0.114 * b + 0.587 * g + 0.299 * r);
    v = std::min(255.0, std::max(0.0, v));
    const auto u = static_cast<uint8_t>(v);
    out.data[i] = out.data[i + 1] = out.data[i + 2] = u;
  }
  return out;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, int ksize, double sigma) {
  const std::vector<double> kernel = gaussian_kernel(ksize, sigma);
  const int half = ksize / 2;
  const int w = img.width, h = img.height;

  // Horizontal pass into a float intermediate, then vertical pass.
  std::vector<double> tmp(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (int t = -half; t <= half; ++t) {
        const int sx = reflect101(x + t, w);
        const uint8_t* p = img.pixel(sx, y);
        const double kv = kernel[t + half];
        acc[0] += kv * p[0];
        acc[1] += kv * p[1];
        acc[2] += kv * p[2];
      }
      double* d = &tmp[(static_cast<size_t>(y) * w + x) * 3];
      d[0] = acc[0];
      d[1] = acc[1];
      d[2] = acc[2];
    }
  }
  ImageBuffer out = img;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (int t = -half; t <= half; ++t) {
        const int sy = reflect101(y + t, h);
        const double* p = &tmp[(static_cast<size_t>(sy) * w + x) * 3];
        const double kv = kernel[t + half];
        acc[0] += kv * p[0];
        acc[1] += kv * p[1];
        acc[2] += kv * p[2];
      }
      uint8_t* d = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        d[c] = static_cast<uint8_t>(
            std::min(255.0, std::max(0.0, std::round(acc[c]))));
      }
    }
  }
  return out;
}

ImageBuffer raw_box_crop(const ImageBuffer& img, const BBox& box) {
  const IntBox b = check_box(img, box);
  ImageBuffer out;
  out.width = b.x1 - b.x0;
  out.height = b.y1 - b.y0;
  out.data.resize(static_cast<size_t>(out.width) * out.height * 3);
  for (int y = b.y0; y < b.y1; ++y) {
    std::memcpy(out.pixel(0, y - b.y0), img.pixel(b.x0, y),
                static_cast<size_t>(out.width) * 3);
  }
  return out;
}

ImageBuffer hard_mask_crop(const ImageBuffer& img, const BBox& box,
                           const InstanceMask& mask) {
  if (mask.width != img.width || mask.height != img.height) {
    throw ImageError("mask not aligned to image");
  }
  const IntBox b = check_box(img, box);
  ImageBuffer out = raw_box_crop(img, box);
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      if (!mask.at(x, y)) {
        uint8_t* p = out.pixel(x - b.x0, y - b.y0);
        p[0] = p[1] = p[2] = 0;
      }
    }
  }
  return out;
}

ImageBuffer soft_mask_crop(const ImageBuffer& img, const BBox& box,
                           const InstanceMask& mask, int ksize, double sigma) {
  if (mask.width != img.width || mask.height != img.height) {
    throw ImageError("mask not aligned to image");
  }
  const IntBox b = check_box(img, box);
  // Full-frame transform then crop, so blur context extends past the box.
  const ImageBuffer soft = gaussian_blur(grayscale(img), ksize, sigma);
  ImageBuffer out = raw_box_crop(img, box);
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      if (!mask.at(x, y)) {
        std::memcpy(out.pixel(x - b.x0, y - b.y0), soft.pixel(x, y), 3);
      }
    }
  }
  return out;
}

}  // namespace ovpl
