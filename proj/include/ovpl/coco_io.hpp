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
#include <string>
#include <vector>

#include "ovpl/annotations.hpp"

namespace ovpl {

class CocoParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Uncompressed COCO RLE: column-major scan, counts alternate runs of 0s and
// 1s starting with 0s.
std::vector<int64_t> mask_to_rle_counts(const InstanceMask& mask);
InstanceMask rle_counts_to_mask(const std::vector<int64_t>& counts, int width,
                                int height);

// COCO-style JSON with the "provenance"/"verdict" extension fields on pseudo
// annotations. Throws CocoParseError on malformed input, missing keys, or a
// dangling image_id.
Dataset parse_coco(const std::filesystem::path& path);
Dataset parse_coco_string(const std::string& json_text);
void emit_coco(const Dataset& dataset, const std::filesystem::path& path);
std::string emit_coco_string(const Dataset& dataset);

// Category split file: {"base": [...], "novel": [...]}.
void load_category_split(const std::filesystem::path& path, Dataset& dataset);

// Atomic file write: temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace ovpl
