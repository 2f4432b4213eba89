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
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "ovpl/eval.hpp"

using namespace ovpl;
namespace fs = std::filesystem;

namespace {

Annotation gt(int64_t id, int64_t image_id, const std::string& category,
              BBox box) {
  Annotation a;
  a.id = id;
  a.image_id = image_id;
  a.category = category;
  a.bbox = box;
  return a;
}

Detection det(int64_t id, int64_t image_id, const std::string& category,
              BBox box, double score) {
  return Detection{id, image_id, category, box, score};
}

// Independent single-class AP oracle: sort by (score desc, id asc), match
// each detection to the best still-free GT of the same image at or above
// the IoU threshold, build the precision envelope, and average it on the
// 101-point recall grid.
double ap_oracle(std::vector<Detection> dets, std::vector<Annotation> gts,
                 double thr) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.id < b.id;
                   });
  std::vector<bool> used(gts.size(), false);
  std::vector<int> is_tp;
  for (const Detection& d : dets) {
    int best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].image_id != d.image_id ||
          gts[g].category != d.category) {
        continue;
      }
      const double v = iou(d.bbox, gts[g].bbox);
      if (v >= thr && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[best] = true;
      is_tp.push_back(1);
    } else {
      is_tp.push_back(0);
    }
  }
  if (gts.empty()) return 0.0;
  std::vector<double> precision, recall;
  int tp = 0;
  for (size_t i = 0; i < is_tp.size(); ++i) {
    tp += is_tp[i];
    precision.push_back(static_cast<double>(tp) / (i + 1));
    recall.push_back(static_cast<double>(tp) / gts.size());
  }
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double target = r / 100.0;
    double best = 0.0;
    for (size_t i = 0; i < precision.size(); ++i) {
      if (recall[i] >= target) best = std::max(best, precision[i]);
    }
    sum += best;
  }
  return sum / 101.0;
}

}  // namespace

TEST_CASE("greedy_match") {
  const std::vector<Annotation> gts = {
      gt(1, 1, "cat", {0, 0, 10, 10}), gt(2, 1, "cat", {20, 0, 10, 10}),
      gt(3, 2, "cat", {0, 0, 10, 10}), gt(4, 1, "dog", {0, 0, 10, 10})};

  SUBCASE("prefers the higher-IoU ground truth") {
    const std::vector<Detection> dets = {
        det(1, 1, "cat", {1, 0, 10, 10}, 0.9)};
    const MatchResult m = greedy_match(dets, gts, 0.5);
    CHECK(m.matched_gt == std::vector<int>{0});
    CHECK(m.tp == 1);
    CHECK(m.fn == 3);
  }
  SUBCASE("never matches across images or classes") {
    const std::vector<Detection> dets = {
        det(1, 3, "cat", {0, 0, 10, 10}, 0.9),
        det(2, 1, "bird", {0, 0, 10, 10}, 0.8)};
    const MatchResult m = greedy_match(dets, gts, 0.5);
    CHECK(m.matched_gt == std::vector<int>{-1, -1});
    CHECK(m.fp == 2);
  }
  SUBCASE("higher score claims the GT first; ties break by id") {
    const std::vector<Detection> dets = {
        det(2, 1, "cat", {0, 0, 10, 10}, 0.5),
        det(1, 1, "cat", {0, 0, 10, 10}, 0.5)};
    const MatchResult m = greedy_match(dets, gts, 0.5);
    // Equal scores: id 1 matches GT index 0, id 2 is left unmatched.
    CHECK(m.tp == 1);
    CHECK(m.fp == 1);
  }
  SUBCASE("below-threshold IoU does not match") {
    const std::vector<Detection> dets = {
        det(1, 1, "cat", {8, 8, 10, 10}, 0.9)};
    const MatchResult m = greedy_match(dets, gts, 0.5);
    CHECK(m.matched_gt == std::vector<int>{-1});
  }
}

TEST_CASE("ap50 hand fixture") {
  // Three GTs, four detections ranked TP, FP, TP, TP.
  const std::vector<Annotation> gts = {gt(1, 1, "cat", {0, 0, 10, 10}),
                                       gt(2, 1, "cat", {20, 0, 10, 10}),
                                       gt(3, 1, "cat", {40, 0, 10, 10})};
  const std::vector<Detection> dets = {
      det(1, 1, "cat", {0, 0, 10, 10}, 0.9),
      det(2, 1, "cat", {60, 0, 10, 10}, 0.8),
      det(3, 1, "cat", {20, 0, 10, 10}, 0.7),
      det(4, 1, "cat", {40, 0, 10, 10}, 0.6)};

  EvalConfig config;
  const EvalReport r = ap50(dets, gts, {"cat"}, config);
  CHECK(r.mean_ap == doctest::Approx(84.25 / 101.0).epsilon(1e-12));
  CHECK(r.tp == 3);
  CHECK(r.fp == 1);
  CHECK(r.fn == 0);

  EvalConfig exact = config;
  exact.interpolation = ApInterpolation::kExactEnvelope;
  CHECK(ap50(dets, gts, {"cat"}, exact).mean_ap ==
        doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("perfect detections score 100 percent") {
  std::vector<Annotation> gts;
  std::vector<Detection> dets;
  for (int i = 0; i < 7; ++i) {
    const std::string cls = i % 2 ? "cat" : "dog";
    gts.push_back(gt(i + 1, i % 3, cls, {i * 12.0, 0, 10, 10}));
    dets.push_back(det(i + 1, i % 3, cls, {i * 12.0, 0, 10, 10}, 0.5));
  }
  const EvalReport r = ap50(dets, gts, {"cat", "dog"});
  CHECK(r.mean_ap == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.fp == 0);
  CHECK(r.fn == 0);
}

TEST_CASE("zero-GT classes are excluded from the mean") {
  const std::vector<Annotation> gts = {gt(1, 1, "cat", {0, 0, 10, 10})};
  const std::vector<Detection> dets = {
      det(1, 1, "cat", {0, 0, 10, 10}, 0.9),
      det(2, 1, "dog", {0, 0, 10, 10}, 0.9)};
  const EvalReport r = ap50(dets, gts, {"cat", "dog"});
  CHECK(r.per_class_ap.count("dog") == 0);
  CHECK(r.mean_ap == doctest::Approx(1.0));
}

TEST_CASE("ap50 against the independent oracle on random cases") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> coord(0.0, 40.0);
  std::uniform_real_distribution<double> size(2.0, 15.0);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  const std::vector<std::string> classes = {"cat", "dog"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Annotation> gts;
    std::vector<Detection> dets;
    const int n_gt = static_cast<int>(rng() % 6);
    const int n_det = static_cast<int>(rng() % 8);
    for (int i = 0; i < n_gt; ++i) {
      gts.push_back(gt(i + 1, static_cast<int64_t>(rng() % 2),
                       classes[rng() % 2],
                       {coord(rng), coord(rng), size(rng), size(rng)}));
    }
    for (int i = 0; i < n_det; ++i) {
      BBox box{coord(rng), coord(rng), size(rng), size(rng)};
      // Half the time, jitter an existing GT so matches actually occur.
      if (!gts.empty() && rng() % 2 == 0) {
        const BBox& g = gts[rng() % gts.size()].bbox;
        box = {g.x + coord(rng) / 20.0, g.y + coord(rng) / 20.0, g.w, g.h};
      }
      dets.push_back(det(i + 1, static_cast<int64_t>(rng() % 2),
                         classes[rng() % 2], box, score(rng)));
    }
    if (gts.empty()) continue;

    double expected_sum = 0.0;
    int expected_classes = 0;
    for (const auto& cls : classes) {
      std::vector<Annotation> cgts;
      std::vector<Detection> cdets;
      for (const auto& g : gts) {
        if (g.category == cls) cgts.push_back(g);
      }
      for (const auto& d : dets) {
        if (d.category == cls) cdets.push_back(d);
      }
      if (cgts.empty()) continue;
      ++expected_classes;
      expected_sum += ap_oracle(cdets, cgts, 0.5);
    }
    const EvalReport r = ap50(dets, gts, {"cat", "dog"});
    CHECK(r.mean_ap ==
          doctest::Approx(expected_sum / expected_classes).epsilon(1e-10));
  }
}

namespace {

Dataset subset_dataset() {
  Dataset d;
  d.base_classes = {"cat"};
  d.novel_classes = {"drawer"};
  // Image 1: 9 annotations -> crowded (threshold 8, strict).
  for (int i = 0; i < 9; ++i) {
    d.annotations.push_back(gt(100 + i, 1, "cat", {i * 12.0, 0, 10, 10}));
  }
  // Image 2: exactly 8 -> not crowded.
  for (int i = 0; i < 8; ++i) {
    d.annotations.push_back(gt(200 + i, 2, "cat", {i * 12.0, 0, 10, 10}));
  }
  // Image 3: a novel GT 60% covered by a cat box -> occluded.
  d.annotations.push_back(gt(300, 3, "drawer", {0, 0, 10, 10}));
  d.annotations.push_back(gt(301, 3, "cat", {0, 0, 6, 10}));
  // Image 4: a novel GT covered exactly 50% -> not occluded (strict).
  d.annotations.push_back(gt(400, 4, "drawer", {0, 0, 10, 10}));
  d.annotations.push_back(gt(401, 4, "cat", {0, 0, 5, 10}));
  for (int64_t id = 1; id <= 4; ++id) {
    d.images.push_back({id, 120, 40, "img" + std::to_string(id) + ".png"});
  }
  return d;
}

}  // namespace

TEST_CASE("crowded subset keeps only images with more than 8 objects") {
  const Dataset d = subset_dataset();
  std::vector<Detection> dets;
  // Perfect detections everywhere.
  for (const Annotation& a : d.annotations) {
    dets.push_back(det(a.id, a.image_id, a.category, a.bbox, 0.9));
  }
  const EvalReport all =
      subset_eval(dets, d, Subset::kAll, {"cat", "drawer"});
  CHECK(all.tp == static_cast<int64_t>(d.annotations.size()));

  const EvalReport crowded =
      subset_eval(dets, d, Subset::kCrowded, {"cat", "drawer"});
  CHECK(crowded.subset == "crowded");
  CHECK(crowded.tp == 9);  // image 1 only
  CHECK(crowded.fp == 0);  // detections on excluded images are dropped
  CHECK(crowded.mean_ap == doctest::Approx(1.0));
}

TEST_CASE("occluded subset applies the strict coverage threshold") {
  const Dataset d = subset_dataset();
  std::vector<Detection> dets = {
      det(1, 3, "drawer", {0, 0, 10, 10}, 0.9),
      det(2, 4, "drawer", {0, 0, 10, 10}, 0.9)};
  const EvalReport r =
      subset_eval(dets, d, Subset::kOccluded, {"drawer"});
  CHECK(r.subset == "occluded");
  // Only the 60%-covered drawer (image 3) is in the subset; the image-4
  // drawer is at exactly 50% and its detection is ignored.
  CHECK(r.tp == 1);
  CHECK(r.fp == 0);
  CHECK(r.fn == 0);
  CHECK(r.mean_ap == doctest::Approx(1.0));

  // With only the image-3 detection, ignore mode sees one GT and one TP,
  // while false-negative mode also charges the missed image-4 drawer.
  const std::vector<Detection> one = {dets[0]};
  const EvalReport ignored =
      subset_eval(one, d, Subset::kOccluded, {"drawer"});
  CHECK(ignored.fn == 0);
  EvalConfig fn_mode;
  fn_mode.occluded_mode = OccludedIgnoreMode::kFalseNegative;
  const EvalReport strict =
      subset_eval(one, d, Subset::kOccluded, {"drawer"}, fn_mode);
  CHECK(strict.tp == 1);
  CHECK(strict.fn == 1);
}

TEST_CASE("empty subset is flagged, not crashed") {
  Dataset d;
  d.images.push_back({1, 10, 10, "a.png"});
  d.annotations.push_back(gt(1, 1, "cat", {0, 0, 5, 5}));
  const EvalReport r = subset_eval({}, d, Subset::kCrowded, {"cat"});
  CHECK(r.empty);
  CHECK(r.mean_ap == 0.0);
}

TEST_CASE("pseudo_as_detections and pseudo_label_quality") {
  Dataset d;
  d.novel_classes = {"drawer"};
  d.images.push_back({1, 20, 20, "a.png"});
  d.annotations.push_back(gt(1, 1, "drawer", {0, 0, 10, 10}));
  Annotation p = gt(2, 1, "drawer", {0, 0, 10, 10});
  p.provenance = Provenance::kPseudo;
  d.annotations.push_back(p);

  const auto dets = pseudo_as_detections(d.annotations);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].score == 1.0);
  CHECK(dets[0].category == "drawer");

  const EvalReport r = pseudo_label_quality(d, Subset::kAll);
  CHECK(r.mean_ap == doctest::Approx(1.0));
  CHECK(r.tp == 1);
}

TEST_CASE("load_detections") {
  const fs::path dir = fs::temp_directory_path() / "ovpl_eval_io";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "dets.json");
    out << R"([{"image_id": 1, "category": "cat",
                "bbox": [1.0, 2.0, 3.0, 4.0], "score": 0.75},
               {"image_id": 2, "category_id": 7,
                "bbox": [0, 0, 5, 5], "score": 0.5}])";
  }
  const auto dets = load_detections(dir / "dets.json", {{7, "dog"}});
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].category == "cat");
  CHECK(dets[0].bbox == BBox{1, 2, 3, 4});
  CHECK(dets[0].score == 0.75);
  CHECK(dets[1].category == "dog");
}

TEST_CASE("report rendering") {
  EvalReport r;
  r.per_class_ap = {{"cat", 0.5}};
  r.mean_ap = 0.5;
  r.tp = 1;
  r.fp = 2;
  r.fn = 3;
  const std::string text = report_text(r);
  CHECK(text.find("cat") != std::string::npos);
  const std::string json = report_json(r);
  CHECK(json.find("50.0") != std::string::npos);
}
