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

#include "ovpl/pipeline.hpp"

namespace ovpl {

using LabelHistogram = std::map<std::string, int64_t>;

struct SemanticAnchorSet {
  std::set<std::string> foreground;
  std::set<std::string> background;
  std::set<std::string> outliers;
  int64_t threshold = 0;
};

enum class ThresholdMode { kMin, kAll };

// Minimum ground-truth annotation count over the dataset's base classes.
// Throws when no base class has annotations.
int64_t min_base_threshold(const Dataset& dataset);

// Labels below the threshold become outliers; the rest split by their
// grounding verdict. Labels without a grounding entry are skipped
// (step-3 parse exclusions).
SemanticAnchorSet filter_anchors(
    const LabelHistogram& hist,
    const std::map<std::string, Grounding>& grounding, int64_t threshold);

// Majority grounding per label from the pipeline's votes; ties -> background.
std::map<std::string, Grounding> majority_grounding(
    const PipelineOutput& output);

// base ∪ foreground anchors. Background and outliers excluded; collisions
// with existing base names deduplicate.
std::set<std::string> merge_open_world_base(const std::set<std::string>& base,
                                            const SemanticAnchorSet& anchors);

// Drops pseudo annotations whose category names a ground-truth novel class.
std::vector<Annotation> cbl_plus_plus_filter(
    const std::vector<Annotation>& annotations,
    const std::set<std::string>& novel_classes);

struct BenchmarkStats {
  std::string name;
  int64_t covered_classes = 0;  // labels exact-matching benchmark categories
  int64_t annotations = 0;      // pseudo annotations on covered labels
};

struct StatsReport {
  int64_t total_classes = 0;
  int64_t total_annotations = 0;
  int64_t total_unsure = 0;
  std::vector<BenchmarkStats> benchmarks;
};

StatsReport stats_report(
    const PipelineOutput& output,
    const std::map<std::string, std::set<std::string>>& benchmark_vocabs);

std::string stats_report_text(const StatsReport& report);
std::string stats_report_json(const StatsReport& report);

void save_anchor_set(const SemanticAnchorSet& anchors,
                     const std::filesystem::path& path);
SemanticAnchorSet load_anchor_set(const std::filesystem::path& path);

}  // namespace ovpl
