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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ovpl/backend.hpp"
#include "ovpl/preprocess.hpp"

namespace ovpl {

enum class MaskLevel { kWhole, kPart, kSubPart };

struct MaskProposal {
  int64_t image_id = 0;
  MaskLevel level = MaskLevel::kWhole;
  InstanceMask mask;
  double stability_score = 0.0;
};

// JSONL: {"image_id": .., "level": "whole"|"part"|"subpart",
//         "rle": {"size": [h, w], "counts": [...]}, "score": ..}
std::vector<MaskProposal> load_proposals(const std::filesystem::path& path);
void save_proposals(const std::vector<MaskProposal>& proposals,
                    const std::filesystem::path& path);

// Keeps whole-level proposals, dropping near-duplicates (mask IoU above
// `dedup_iou`) in favor of the higher stability score.
std::vector<MaskProposal> select_whole_masks(
    const std::vector<MaskProposal>& proposals, double dedup_iou = 0.9);

struct UnsureLogEntry {
  int64_t image_id = 0;
  int proposal_index = 0;
  std::string reasoning;
};

struct PipelineCounters {
  int64_t input_proposals = 0;
  int64_t filtered = 0;  // non-whole or dedup-removed, never queried
  int64_t emitted = 0;
  int64_t discarded_no = 0;
  int64_t discarded_unsure = 0;
  int64_t parse_dropped = 0;  // step-2 parse failures
};

struct PipelineOutput {
  std::vector<Annotation> pseudo_annotations;
  std::map<std::string, int64_t> label_histogram;
  // Per-label grounding votes from step 3.
  std::map<std::string, int64_t> foreground_votes;
  std::map<std::string, int64_t> background_votes;
  std::set<std::string> background_labels;  // majority vote, ties background
  std::set<std::string> grounding_excluded;  // step-3 parse failures
  std::vector<UnsureLogEntry> unsure_log;
  PipelineCounters counters;
};

struct PipelineConfig {
  CropMode crop_mode = CropMode::kSoft;
  int blur_ksize = 31;
  double blur_sigma = 0.0;
  double dedup_iou = 0.9;
  int max_retries = 2;
  int max_in_flight = 1;
  bool crop_before_transform = false;  // alternative blur-after-crop path
};

// Runs verify -> label -> ground over every whole-mask proposal, in
// deterministic order (ascending image_id, then proposal index). Requires
// every proposal's image to be listed in `dataset` with a readable file.
PipelineOutput run_pipeline(const Dataset& dataset,
                            const std::vector<MaskProposal>& proposals,
                            Backend& backend, const PipelineConfig& config,
                            const std::filesystem::path& image_root,
                            AuditLog* audit = nullptr);

// Same, with images supplied in memory (tests and single-shot runs).
PipelineOutput run_pipeline_in_memory(
    const Dataset& dataset, const std::vector<MaskProposal>& proposals,
    Backend& backend, const PipelineConfig& config,
    const std::map<int64_t, ImageBuffer>& images, AuditLog* audit = nullptr);

void write_unsure_log(const std::vector<UnsureLogEntry>& entries,
                      const std::filesystem::path& path);

}  // namespace ovpl
