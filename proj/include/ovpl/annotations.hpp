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
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ovpl {

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Axis-aligned box, pixel units, (x, y) is the top-left corner.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool operator==(const BBox&) const = default;
};

// Row-major binary raster aligned to image coordinates.
struct InstanceMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> bits;  // size width*height, values 0/1

  bool at(int x, int y) const {
    return bits[static_cast<size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v = true) {
    bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0;
  }
  size_t area() const;
  bool operator==(const InstanceMask&) const = default;
};

InstanceMask make_mask(int width, int height);

enum class Provenance { kGroundTruth, kPseudo };

enum class TernaryAnswer { kYes, kNo, kUnsure };

struct TernaryVerdict {
  TernaryAnswer answer = TernaryAnswer::kUnsure;
  std::optional<std::string> reasoning;  // present only when answer is Unsure

  bool operator==(const TernaryVerdict&) const = default;
};

struct Annotation {
  int64_t id = 0;
  int64_t image_id = 0;
  std::string category;
  BBox bbox;
  std::optional<InstanceMask> mask;
  Provenance provenance = Provenance::kGroundTruth;
  std::optional<TernaryVerdict> verdict;

  bool operator==(const Annotation&) const = default;
};

struct ImageInfo {
  int64_t id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;

  bool operator==(const ImageInfo&) const = default;
};

struct Dataset {
  std::vector<ImageInfo> images;
  std::vector<Annotation> annotations;
  std::set<std::string> base_classes;
  std::set<std::string> novel_classes;

  const ImageInfo* find_image(int64_t image_id) const;
};

// Intersection-over-union of two boxes; 0 when the union has zero area.
double iou(const BBox& a, const BBox& b);

// IoU over the set bits of two masks (must share dimensions).
double mask_iou(const InstanceMask& a, const InstanceMask& b);

// Fraction of `target` covered by the union of `others`, computed exactly
// by plane-sweep rectangle decomposition. Throws on a zero-area target.
double coverage_fraction(const BBox& target, std::span<const BBox> others);

// True iff the image holds strictly more than `threshold` annotations.
bool is_crowded(std::span<const Annotation> image_annotations,
                int threshold = 8);

// True iff `target` is covered strictly more than `threshold` by the boxes
// of `others` (which must not contain `target` itself).
bool is_occluded(const Annotation& target, std::span<const Annotation> others,
                 double threshold = 0.5);

// Minimal box containing every set bit. Throws on an empty mask.
BBox tight_bbox(const InstanceMask& mask);

}  // namespace ovpl
