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
#include "ovpl/coco_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace ovpl {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<int64_t> mask_to_rle_counts(const InstanceMask& mask) {
  std::vector<int64_t> counts;
  uint8_t prev = 0;
  int64_t run = 0;
  // Column-major scan (COCO convention).
  for (int x = 0; x < mask.width; ++x) {
    for (int y = 0; y < mask.height; ++y) {
      const uint8_t v = mask.at(x, y) ? 1 : 0;
      if (v == prev) {
        ++run;
      } else {
        counts.push_back(run);
        prev = v;
        run = 1;
      }
    }
  }
  counts.push_back(run);
  return counts;
}

InstanceMask rle_counts_to_mask(const std::vector<int64_t>& counts, int width,
                                int height) {
  InstanceMask mask = make_mask(width, height);
  int64_t pos = 0;
  uint8_t val = 0;
  const int64_t total = static_cast<int64_t>(width) * height;
  for (int64_t c : counts) {
    if (c < 0 || pos + c > total) {
      throw CocoParseError("RLE counts exceed mask size");
    }
    if (val) {
      for (int64_t i = pos; i < pos + c; ++i) {
        const int x = static_cast<int>(i / height);
        const int y = static_cast<int>(i % height);
        mask.set(x, y);
      }
    }
    pos += c;
    val = 1 - val;
  }
  if (pos != total) throw CocoParseError("RLE counts do not fill mask");
  return mask;
}

namespace {

const char* answer_name(TernaryAnswer a) {
  switch (a) {
    case TernaryAnswer::kYes:
      return "Yes";
    case TernaryAnswer::kNo:
      return "No";
    default:
      return "Unsure";
  }
}

TernaryAnswer answer_from_name(const std::string& s) {
  if (s == "Yes") return TernaryAnswer::kYes;
  if (s == "No") return TernaryAnswer::kNo;
  if (s == "Unsure") return TernaryAnswer::kUnsure;
  throw CocoParseError("unknown verdict answer: " + s);
}

json require(const json& obj, const char* key, const char* ctx) {
  if (!obj.contains(key)) {
    throw CocoParseError(std::string("missing key '") + key + "' in " + ctx);
  }
  return obj.at(key);
}

}  // namespace

Dataset parse_coco_string(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CocoParseError(std::string("malformed JSON: ") + e.what());
  }

  Dataset ds;
  std::map<int64_t, std::string> cat_names;
  for (const auto& c : require(root, "categories", "document")) {
    cat_names[require(c, "id", "category").get<int64_t>()] =
        require(c, "name", "category").get<std::string>();
  }
  for (const auto& im : require(root, "images", "document")) {
    ImageInfo info;
    info.id = require(im, "id", "image").get<int64_t>();
    info.width = require(im, "width", "image").get<int>();
    info.height = require(im, "height", "image").get<int>();
    info.file_name = im.value("file_name", "");
    ds.images.push_back(info);
  }
  for (const auto& a : require(root, "annotations", "document")) {
    Annotation ann;
    ann.id = require(a, "id", "annotation").get<int64_t>();
    ann.image_id = require(a, "image_id", "annotation").get<int64_t>();
    if (ds.find_image(ann.image_id) == nullptr) {
      throw CocoParseError("annotation " + std::to_string(ann.id) +
                           " references unknown image_id " +
                           std::to_string(ann.image_id));
    }
    const int64_t cat_id =
        require(a, "category_id", "annotation").get<int64_t>();
    auto it = cat_names.find(cat_id);
    if (it == cat_names.end()) {
      throw CocoParseError("annotation " + std::to_string(ann.id) +
                           " references unknown category_id " +
                           std::to_string(cat_id));
    }
    ann.category = it->second;
    const auto bb = require(a, "bbox", "annotation");
    if (!bb.is_array() || bb.size() != 4) {
      throw CocoParseError("bbox must be a 4-element array");
    }
    ann.bbox = BBox{bb[0].get<double>(), bb[1].get<double>(),
                    bb[2].get<double>(), bb[3].get<double>()};
    if (a.contains("segmentation") && a["segmentation"].is_object()) {
      const auto& seg = a["segmentation"];
      const auto size = require(seg, "size", "segmentation");
      const int h = size[0].get<int>(), w = size[1].get<int>();
      const auto counts =
          require(seg, "counts", "segmentation").get<std::vector<int64_t>>();
      ann.mask = rle_counts_to_mask(counts, w, h);
    }
    ann.provenance = (a.value("provenance", "") == "pseudo")
                         ? Provenance::kPseudo
                         : Provenance::kGroundTruth;
    if (a.contains("verdict")) {
      TernaryVerdict v;
      v.answer = answer_from_name(
          require(a["verdict"], "answer", "verdict").get<std::string>());
      if (a["verdict"].contains("reasoning")) {
        v.reasoning = a["verdict"]["reasoning"].get<std::string>();
      }
      ann.verdict = v;
    }
    ds.annotations.push_back(std::move(ann));
  }
  return ds;
}

Dataset parse_coco(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CocoParseError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_coco_string(ss.str());
}

std::string emit_coco_string(const Dataset& dataset) {
  json root;
  root["images"] = json::array();
  for (const auto& im : dataset.images) {
    root["images"].push_back({{"id", im.id},
                              {"width", im.width},
                              {"height", im.height},
                              {"file_name", im.file_name}});
  }
  // Stable category ids: sorted names, 1-based.
  std::map<std::string, int64_t> cat_ids;
  for (const auto& a : dataset.annotations) cat_ids.emplace(a.category, 0);
  int64_t next_id = 1;
  for (auto& [name, id] : cat_ids) id = next_id++;
  root["categories"] = json::array();
  for (const auto& [name, id] : cat_ids) {
    root["categories"].push_back({{"id", id}, {"name", name}});
  }
  root["annotations"] = json::array();
  for (const auto& a : dataset.annotations) {
    json ja = {{"id", a.id},
               {"image_id", a.image_id},
               {"category_id", cat_ids.at(a.category)},
               {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
               {"area", a.bbox.area()},
               {"iscrowd", 0}};
    if (a.mask) {
      ja["segmentation"] = {{"size", {a.mask->height, a.mask->width}},
                            {"counts", mask_to_rle_counts(*a.mask)}};
    }
    if (a.provenance == Provenance::kPseudo) {
      ja["provenance"] = "pseudo";
      if (a.verdict) {
        json jv = {{"answer", answer_name(a.verdict->answer)}};
        if (a.verdict->reasoning) jv["reasoning"] = *a.verdict->reasoning;
        ja["verdict"] = jv;
      }
    }
    root["annotations"].push_back(std::move(ja));
  }
  return root.dump(2) + "\n";
}

void emit_coco(const Dataset& dataset, const fs::path& path) {
  write_file_atomic(path, emit_coco_string(dataset));
}

void load_category_split(const fs::path& path, Dataset& dataset) {
  std::ifstream in(path);
  if (!in) throw CocoParseError("cannot open " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CocoParseError(std::string("malformed split file: ") + e.what());
  }
  dataset.base_classes.clear();
  dataset.novel_classes.clear();
  for (const auto& s : require(root, "base", "split file")) {
    dataset.base_classes.insert(s.get<std::string>());
  }
  for (const auto& s : require(root, "novel", "split file")) {
    dataset.novel_classes.insert(s.get<std::string>());
  }
  for (const auto& name : dataset.novel_classes) {
    if (dataset.base_classes.count(name)) {
      throw CocoParseError("class '" + name + "' listed as both base and novel");
    }
  }
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

}  // namespace ovpl
