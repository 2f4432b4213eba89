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
#include <optional>
#include <stdexcept>
#include <string>

#include "ovpl/anchors.hpp"
#include "ovpl/cbl.hpp"
#include "ovpl/eval.hpp"
#include "ovpl/pipeline.hpp"

namespace ovpl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat TOML subset: [section] headers, key = value lines, where value is a
// quoted string, integer, float, or bool. '#' starts a comment.
class TomlTable {
 public:
  static TomlTable parse_file(const std::filesystem::path& path);
  static TomlTable parse_string(const std::string& text);

  bool has(const std::string& dotted_key) const;
  std::string get_string(const std::string& dotted_key) const;
  std::string get_string(const std::string& dotted_key,
                         const std::string& fallback) const;
  int64_t get_int(const std::string& dotted_key, int64_t fallback) const;
  double get_double(const std::string& dotted_key, double fallback) const;
  bool get_bool(const std::string& dotted_key, bool fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

enum class BackendKind { kHttp, kMock };

struct RunConfig {
  // dataset
  std::filesystem::path coco_path;
  std::filesystem::path split_path;
  std::filesystem::path image_root;
  std::filesystem::path proposal_path;
  // backend
  BackendKind backend_kind = BackendKind::kMock;
  std::string endpoint;
  std::filesystem::path manifest_path;
  int timeout_seconds = 120;
  // pipeline
  PipelineConfig pipeline;
  // thresholds
  ThresholdMode anchor_mode = ThresholdMode::kMin;
  EvalConfig eval;
  // loss inputs
  std::filesystem::path bags_text_path;
  std::filesystem::path bags_image_path;
  std::filesystem::path bank_path;
  Temperatures temps;
  // output
  std::filesystem::path out_dir = ".";
};

// Loads and validates; referenced paths must exist for the fields a command
// uses (validated per command, not globally).
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_toml(const TomlTable& toml,
                               const std::filesystem::path& base_dir);

}  // namespace ovpl
