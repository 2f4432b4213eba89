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
#include "ovpl/annotations.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ovpl {

size_t InstanceMask::area() const {
  return static_cast<size_t>(
      std::count_if(bits.begin(), bits.end(), [](uint8_t b) { return b != 0; }));
}

InstanceMask make_mask(int width, int height) {
  InstanceMask m;
  m.width = width;
  m.height = height;
  m.bits.assign(static_cast<size_t>(width) * height, 0);
  return m;
}

const ImageInfo* Dataset::find_image(int64_t image_id) const {
  for (const auto& img : images) {
    if (img.id == image_id) return &img;
  }
  return nullptr;
}

double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) -
                                      std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) -
                                      std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double mask_iou(const InstanceMask& a, const InstanceMask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw AnnotationError("mask_iou: dimension mismatch");
  }
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.bits.size(); ++i) {
    const bool pa = a.bits[i] != 0, pb = b.bits[i] != 0;
    inter += (pa && pb) ? 1 : 0;
    uni += (pa || pb) ? 1 : 0;
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double coverage_fraction(const BBox& target, std::span<const BBox> others) {
  if (target.area() <= 0.0) {
    throw AnnotationError("coverage_fraction: zero-area target");
  }
  // Clip occluders to the target, then sweep: decompose the covered region
  // into vertical slabs between consecutive x-coordinates and measure each
  // slab's covered y-interval union.
  struct Rect {
    double x0, y0, x1, y1;
  };
  std::vector<Rect> clipped;
  std::vector<double> xs;
  const double tx1 = target.x + target.w, ty1 = target.y + target.h;
  for (const BBox& o : others) {
    Rect r{std::max(o.x, target.x), std::max(o.y, target.y),
           std::min(o.x + o.w, tx1), std::min(o.y + o.h, ty1)};
    if (r.x1 > r.x0 && r.y1 > r.y0) {
      clipped.push_back(r);
      xs.push_back(r.x0);
      xs.push_back(r.x1);
    }
  }
  if (clipped.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  double covered = 0.0;
  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    const double slab_w = xs[i + 1] - xs[i];
    const double mid = 0.5 * (xs[i] + xs[i + 1]);
    std::vector<std::pair<double, double>> spans;
    for (const Rect& r : clipped) {
      if (r.x0 <= mid && mid < r.x1) spans.emplace_back(r.y0, r.y1);
    }
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    double cur0 = spans[0].first, cur1 = spans[0].second, len = 0.0;
    for (size_t j = 1; j < spans.size(); ++j) {
      if (spans[j].first > cur1) {
        len += cur1 - cur0;
        cur0 = spans[j].first;
        cur1 = spans[j].second;
      } else {
        cur1 = std::max(cur1, spans[j].second);
      }
    }
    len += cur1 - cur0;
    covered += slab_w * len;
  }
  return std::min(1.0, covered / target.area());
}

bool is_crowded(std::span<const Annotation> image_annotations, int threshold) {
  return static_cast<int>(image_annotations.size()) > threshold;
}

bool is_occluded(const Annotation& target, std::span<const Annotation> others,
                 double threshold) {
  std::vector<BBox> boxes;
  boxes.reserve(others.size());
  for (const Annotation& a : others) boxes.push_back(a.bbox);
  if (boxes.empty()) return false;
  return coverage_fraction(target.bbox, boxes) > threshold;
}

BBox tight_bbox(const InstanceMask& mask) {
  int min_x = std::numeric_limits<int>::max(), min_y = min_x;
  int max_x = -1, max_y = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
      }
    }
  }
  if (max_x < 0) throw AnnotationError("tight_bbox: empty mask");
  return BBox{static_cast<double>(min_x), static_cast<double>(min_y),
              static_cast<double>(max_x - min_x + 1),
              static_cast<double>(max_y - min_y + 1)};
}

}  // namespace ovpl
