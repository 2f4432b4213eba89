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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"

#include "ovpl/annotations.hpp"
#include "ovpl/coco_io.hpp"

using namespace ovpl;

namespace {

// Pixel-rasterization oracle for coverage on integer-coordinate boxes.
double coverage_oracle(const BBox& target, const std::vector<BBox>& others) {
  int64_t covered = 0, total = 0;
  for (int y = static_cast<int>(target.y); y < target.y + target.h; ++y) {
    for (int x = static_cast<int>(target.x); x < target.x + target.w; ++x) {
      ++total;
      for (const BBox& o : others) {
        if (x >= o.x && x < o.x + o.w && y >= o.y && y < o.y + o.h) {
          ++covered;
          break;
        }
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(total);
}

BBox random_int_box(std::mt19937& rng, int extent) {
  std::uniform_int_distribution<int> pos(0, extent - 1);
  std::uniform_int_distribution<int> size(1, extent);
  BBox b;
  b.x = pos(rng);
  b.y = pos(rng);
  b.w = std::min<double>(size(rng), extent - b.x);
  b.h = std::min<double>(size(rng), extent - b.y);
  return b;
}

}  // namespace

TEST_CASE("iou examples") {
  const BBox unit{0, 0, 1, 1};
  CHECK(iou(unit, unit) == doctest::Approx(1.0));
  CHECK(iou(BBox{0, 0, 1, 1}, BBox{5, 5, 1, 1}) == 0.0);
  // areas 4 and 4, intersection 1, union 7
  CHECK(iou(BBox{0, 0, 2, 2}, BBox{1, 1, 2, 2}) == doctest::Approx(1.0 / 7.0));
  CHECK(iou(BBox{0, 0, 0, 0}, BBox{0, 0, 0, 0}) == 0.0);  // degenerate
}

TEST_CASE("iou symmetry and identity on random boxes") {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const BBox a = random_int_box(rng, 64), b = random_int_box(rng, 64);
    CHECK(iou(a, b) == doctest::Approx(iou(b, a)).epsilon(1e-12));
    CHECK(iou(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("coverage_fraction examples") {
  const BBox target{0, 0, 10, 10};
  CHECK(coverage_fraction(target, {}) == 0.0);
  const std::vector<BBox> containing{{-1, -1, 20, 20}};
  CHECK(coverage_fraction(target, containing) == doctest::Approx(1.0));
  // Two boxes covering the left and right halves: union semantics, not sum.
  const std::vector<BBox> halves{{0, 0, 5, 10}, {5, 0, 5, 10}};
  CHECK(coverage_fraction(target, halves) == doctest::Approx(1.0));
  // Overlapping halves still cap at their union.
  const std::vector<BBox> overlapping{{0, 0, 7, 10}, {3, 0, 7, 10}};
  CHECK(coverage_fraction(target, overlapping) == doctest::Approx(1.0));
  CHECK_THROWS_AS(coverage_fraction(BBox{0, 0, 0, 5}, halves),
                  AnnotationError);
}

TEST_CASE("coverage_fraction matches rasterization oracle") {
  std::mt19937 rng(42);
  for (int i = 0; i < 300; ++i) {
    const BBox target = random_int_box(rng, 64);
    std::vector<BBox> others;
    std::uniform_int_distribution<int> n(0, 4);
    const int count = n(rng);
    for (int j = 0; j < count; ++j) others.push_back(random_int_box(rng, 64));
    CHECK(coverage_fraction(target, others) ==
          doctest::Approx(coverage_oracle(target, others)).epsilon(1e-9));
  }
}

TEST_CASE("coverage_fraction is monotone in others") {
  std::mt19937 rng(43);
  for (int i = 0; i < 100; ++i) {
    const BBox target = random_int_box(rng, 32);
    std::vector<BBox> others{random_int_box(rng, 32)};
    const double before = coverage_fraction(target, others);
    others.push_back(random_int_box(rng, 32));
    CHECK(coverage_fraction(target, others) >= before - 1e-12);
  }
}

TEST_CASE("is_crowded strict threshold") {
  std::vector<Annotation> anns;
  for (int i = 0; i < 9; ++i) {
    Annotation a;
    a.id = i;
    a.image_id = 1;
    anns.push_back(a);
  }
  CHECK(is_crowded(anns, 8));
  anns.pop_back();
  CHECK_FALSE(is_crowded(anns, 8));
  CHECK_FALSE(is_crowded(std::vector<Annotation>{}, 8));
}

TEST_CASE("is_occluded strict threshold") {
  Annotation target;
  target.bbox = BBox{0, 0, 10, 10};
  auto other_with_coverage = [](double cover_h) {
    Annotation o;
    o.bbox = BBox{0, 0, 10, cover_h};
    return o;
  };
  std::vector<Annotation> others{other_with_coverage(5.1)};
  CHECK(is_occluded(target, others, 0.5));
  others = {other_with_coverage(5.0)};
  CHECK_FALSE(is_occluded(target, others, 0.5));
  CHECK_FALSE(is_occluded(target, std::vector<Annotation>{}, 0.5));
}

TEST_CASE("tight_bbox") {
  InstanceMask m = make_mask(8, 8);
  CHECK_THROWS_AS(tight_bbox(m), AnnotationError);
  m.set(3, 5);
  CHECK(tight_bbox(m) == BBox{3, 5, 1, 1});

  InstanceMask full = make_mask(6, 4);
  for (auto& b : full.bits) b = 1;
  CHECK(tight_bbox(full) == BBox{0, 0, 6, 4});

  InstanceMask diag = make_mask(8, 8);
  diag.set(1, 1);
  diag.set(4, 6);
  CHECK(tight_bbox(diag) == BBox{1, 1, 4, 6});
}

TEST_CASE("RLE round trip") {
  std::mt19937 rng(3);
  std::bernoulli_distribution bit(0.3);
  for (int i = 0; i < 20; ++i) {
    InstanceMask m = make_mask(13, 9);
    for (auto& b : m.bits) b = bit(rng) ? 1 : 0;
    const auto counts = mask_to_rle_counts(m);
    CHECK(rle_counts_to_mask(counts, m.width, m.height) == m);
  }
}

TEST_CASE("parse_coco empty dataset") {
  const Dataset ds = parse_coco_string(
      R"({"images": [], "annotations": [], "categories": []})");
  CHECK(ds.images.empty());
  CHECK(ds.annotations.empty());
}

TEST_CASE("parse_coco counts and round trip") {
  Dataset ds;
  ds.images = {ImageInfo{1, 32, 32, "a.png"}, ImageInfo{2, 16, 16, "b.png"}};
  Annotation a1;
  a1.id = 1;
  a1.image_id = 1;
  a1.category = "dog";
  a1.bbox = BBox{1, 2, 3, 4};
  Annotation a2 = a1;
  a2.id = 2;
  a2.category = "cat";
  a2.provenance = Provenance::kPseudo;
  a2.verdict = TernaryVerdict{TernaryAnswer::kYes, std::nullopt};
  Annotation a3;
  a3.id = 3;
  a3.image_id = 2;
  a3.category = "dog";
  a3.bbox = BBox{0, 0, 4, 4};
  InstanceMask m = make_mask(16, 16);
  m.set(0, 0);
  m.set(3, 3);
  a3.mask = m;
  a3.bbox = tight_bbox(m);
  ds.annotations = {a1, a2, a3};

  const Dataset back = parse_coco_string(emit_coco_string(ds));
  REQUIRE(back.images.size() == 2);
  REQUIRE(back.annotations.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back.annotations[i].id == ds.annotations[i].id);
    CHECK(back.annotations[i].category == ds.annotations[i].category);
    CHECK(back.annotations[i].provenance == ds.annotations[i].provenance);
    CHECK(back.annotations[i].bbox == ds.annotations[i].bbox);
  }
  CHECK(back.annotations[2].mask == ds.annotations[2].mask);
  // Emission is a fixed point once ids are canonical.
  CHECK(emit_coco_string(back) == emit_coco_string(ds));
}

TEST_CASE("parse_coco dangling image_id names the id") {
  const char* text = R"({
    "images": [{"id": 1, "width": 8, "height": 8, "file_name": "a.png"}],
    "categories": [{"id": 1, "name": "dog"}],
    "annotations": [{"id": 7, "image_id": 99, "category_id": 1,
                     "bbox": [0, 0, 1, 1]}]
  })";
  CHECK_THROWS_WITH_AS(parse_coco_string(text),
                       doctest::Contains("99"), CocoParseError);
}

TEST_CASE("parse_coco rejects malformed input") {
  CHECK_THROWS_AS(parse_coco_string("{nope"), CocoParseError);
  CHECK_THROWS_AS(parse_coco_string(R"({"images": []})"), CocoParseError);
}
