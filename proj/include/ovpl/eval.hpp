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

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ovpl/annotations.hpp"

namespace ovpl {

struct Detection {
  int64_t id = 0;
  int64_t image_id = 0;
  std::string category;
  BBox bbox;
  double score = 0.0;
};

enum class Subset { kAll, kCrowded, kOccluded };

enum class ApInterpolation { kCoco101, kExactEnvelope };

// How non-occluded novel ground truths are treated in the Occluded subset.
enum class OccludedIgnoreMode { kIgnore, kFalseNegative };

struct EvalConfig {
  double iou_threshold = 0.5;
  int crowded_threshold = 8;       // strictly more objects than this
  double occluded_threshold = 0.5; // strictly more coverage than this
  ApInterpolation interpolation = ApInterpolation::kCoco101;
  OccludedIgnoreMode occluded_mode = OccludedIgnoreMode::kIgnore;
};

struct EvalReport {
  std::map<std::string, double> per_class_ap;  // classes with >= 1 GT
  double mean_ap = 0.0;
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  std::string subset = "all";
  bool empty = false;  // subset had no ground truth
};

struct MatchResult {
  // detection index -> matched GT index, -1 for unmatched (FP).
  std::vector<int> matched_gt;
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
};

// Greedy score-descending matching (ties by ascending detection id): each
// detection takes the highest-IoU unmatched same-class, same-image GT with
// IoU >= threshold.
MatchResult greedy_match(std::vector<Detection> detections,
                         const std::vector<Annotation>& gts,
                         double iou_threshold);

EvalReport ap50(const std::vector<Detection>& detections,
                const std::vector<Annotation>& gts,
                const std::set<std::string>& class_set,
                const EvalConfig& config = {});

EvalReport subset_eval(const std::vector<Detection>& detections,
                       const Dataset& dataset, Subset subset,
                       const std::set<std::string>& class_set,
                       const EvalConfig& config = {});

// Evaluates the dataset's pseudo annotations as unit-score detections against
// its ground truth, on the novel class set.
EvalReport pseudo_label_quality(const Dataset& dataset, Subset subset,
                                const EvalConfig& config = {});

std::vector<Detection> pseudo_as_detections(
    const std::vector<Annotation>& annotations);

// COCO results JSON: [{image_id, category_id, bbox, score}] with a categories
// mapping taken from a dataset file, or inline "category" strings.
std::vector<Detection> load_detections(
    const std::filesystem::path& path,
    const std::map<int64_t, std::string>& category_names = {});

std::string report_text(const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace ovpl
