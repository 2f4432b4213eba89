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
#include "ovpl/config.hpp"

#include <fstream>
#include <sstream>

namespace ovpl {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

TomlTable TomlTable::parse_string(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // '#' inside a quoted string is content, not a comment.
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') {
        in_quotes = !in_quotes;
      } else if (line[i] == '#' && !in_quotes) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    const std::string dotted = section.empty() ? key : section + "." + key;
    table.values_[dotted] = value;
  }
  return table;
}

TomlTable TomlTable::parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool TomlTable::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string TomlTable::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string TomlTable::get_string(const std::string& key,
                                  const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int64_t TomlTable::get_int(const std::string& key, int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an integer");
  }
}

double TomlTable::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number");
  }
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  throw ConfigError("config key " + key + " is not a bool");
}

RunConfig run_config_from_toml(const TomlTable& t, const fs::path& base_dir) {
  RunConfig cfg;
  auto path_of = [&](const std::string& key) -> fs::path {
    const std::string v = t.get_string(key, "");
    if (v.empty()) return {};
    fs::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  cfg.coco_path = path_of("dataset.coco");
  cfg.split_path = path_of("dataset.split");
  cfg.image_root = path_of("dataset.image_root");
  cfg.proposal_path = path_of("proposals.file");

  const std::string kind = t.get_string("backend.kind", "mock");
  if (kind == "http") {
    cfg.backend_kind = BackendKind::kHttp;
  } else if (kind == "mock") {
    cfg.backend_kind = BackendKind::kMock;
  } else {
    throw ConfigError("backend.kind must be 'http' or 'mock'");
  }
  cfg.endpoint = t.get_string("backend.endpoint", "");
  cfg.manifest_path = path_of("backend.manifest");
  cfg.timeout_seconds =
      static_cast<int>(t.get_int("backend.timeout_seconds", 120));
  cfg.pipeline.max_retries =
      static_cast<int>(t.get_int("backend.max_retries", 2));
  cfg.pipeline.max_in_flight =
      static_cast<int>(t.get_int("backend.max_in_flight", 1));

  const std::string mode = t.get_string("preprocess.mode", "soft");
  if (mode == "soft") {
    cfg.pipeline.crop_mode = CropMode::kSoft;
  } else if (mode == "hard") {
    cfg.pipeline.crop_mode = CropMode::kHard;
  } else if (mode == "raw") {
    cfg.pipeline.crop_mode = CropMode::kRaw;
  } else {
    throw ConfigError("preprocess.mode must be soft, hard, or raw");
  }
  cfg.pipeline.blur_ksize = static_cast<int>(t.get_int("preprocess.ksize", 31));
  cfg.pipeline.blur_sigma = t.get_double("preprocess.sigma", 0.0);
  cfg.pipeline.crop_before_transform =
      t.get_bool("preprocess.crop_before_transform", false);
  cfg.pipeline.dedup_iou = t.get_double("thresholds.dedup_iou", 0.9);

  const std::string anchor = t.get_string("thresholds.anchor_mode", "MIN");
  if (anchor == "MIN") {
    cfg.anchor_mode = ThresholdMode::kMin;
  } else if (anchor == "ALL") {
    cfg.anchor_mode = ThresholdMode::kAll;
  } else {
    throw ConfigError("thresholds.anchor_mode must be MIN or ALL");
  }
  cfg.eval.crowded_threshold =
      static_cast<int>(t.get_int("thresholds.crowded", 8));
  cfg.eval.occluded_threshold = t.get_double("thresholds.occluded", 0.5);
  cfg.eval.iou_threshold = t.get_double("thresholds.iou", 0.5);

  cfg.temps.tau_bag = t.get_double("temperatures.tau_bag", 30.0);
  cfg.temps.tau_bg = t.get_double("temperatures.tau_bg", 5.0);
  cfg.temps.tau_cls = t.get_double("temperatures.tau_cls", 30.0);
  cfg.temps.tau_individual = t.get_double("temperatures.tau_individual", 30.0);
  try {
    cfg.temps.validate();
  } catch (const NumericError& e) {
    throw ConfigError(e.what());
  }

  cfg.bags_text_path = path_of("loss.bags_text");
  cfg.bags_image_path = path_of("loss.bags_image");
  cfg.bank_path = path_of("loss.bank");

  const std::string out = t.get_string("output.dir", ".");
  fs::path out_path(out);
  cfg.out_dir = out_path.is_absolute() ? out_path : base_dir / out_path;
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_toml(TomlTable::parse_file(path),
                              path.parent_path().empty()
                                  ? fs::path(".")
                                  : path.parent_path());
}

}  // namespace ovpl
