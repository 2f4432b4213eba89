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
#include "corpus_fixture.hpp"

#include <fstream>

#include "json.hpp"

#include "ovpl/coco_io.hpp"
#include "ovpl/hash.hpp"

namespace ovpl::testing {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kSide = 24;

ImageBuffer patterned_image(int image_id) {
  ImageBuffer img = make_image(kSide, kSide);
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      uint8_t* p = img.pixel(x, y);
      p[0] = static_cast<uint8_t>((x * 7 + image_id * 31) % 256);
      p[1] = static_cast<uint8_t>((y * 11 + image_id * 57) % 256);
      p[2] = static_cast<uint8_t>((x * 3 + y * 5 + image_id * 13) % 256);
    }
  }
  return img;
}

InstanceMask rect_mask(int x0, int y0, int w, int h) {
  InstanceMask m = make_mask(kSide, kSide);
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) m.set(x, y);
  }
  return m;
}

ImageBuffer crop_for(const ImageBuffer& img, const InstanceMask& mask,
                     const PipelineConfig& config) {
  const BBox box = tight_bbox(mask);
  switch (config.crop_mode) {
    case CropMode::kRaw:
      return raw_box_crop(img, box);
    case CropMode::kHard:
      return hard_mask_crop(img, box, mask);
    default:
      return soft_mask_crop(img, box, mask, config.blur_ksize,
                            config.blur_sigma);
  }
}

}  // namespace

MockCorpus make_mock_corpus(const PipelineConfig& config) {
  MockCorpus c;
  for (int64_t id = 1; id <= 5; ++id) {
    c.images[id] = patterned_image(static_cast<int>(id));
    c.dataset.images.push_back(
        ImageInfo{id, kSide, kSide, "img" + std::to_string(id) + ".png"});
    Annotation gt;
    gt.id = 100 + id;
    gt.image_id = id;
    gt.category = "table";
    gt.bbox = BBox{1, 1, 4, 4};
    c.dataset.annotations.push_back(gt);
  }
  c.dataset.base_classes = {"table", "chair"};
  c.dataset.novel_classes = {"drawer"};

  auto add = [&](int64_t image_id, MaskLevel level, InstanceMask mask,
                 double score) {
    c.proposals.push_back(MaskProposal{image_id, level, std::move(mask), score});
  };
  auto script = [&](int64_t image_id, const InstanceMask& mask,
                    const char* step, const std::string& text) {
    const std::string hash =
        crop_sha256(crop_for(c.images.at(image_id), mask, config));
    c.script.emplace_back(step, hash, text);
  };

  // img1: emitted foreground "drawer"; a part-level proposal is filtered.
  const InstanceMask m1 = rect_mask(4, 4, 8, 8);
  add(1, MaskLevel::kWhole, m1, 0.9);
  add(1, MaskLevel::kPart, rect_mask(5, 5, 3, 3), 0.8);
  script(1, m1, "verify", "Answer: Yes\nReasoning: None");
  script(1, m1, "label", "Answer: Drawer");
  script(1, m1, "ground", "Answer: Foreground");

  // img2: emitted background "grass"; exact duplicate mask deduplicated.
  const InstanceMask m2 = rect_mask(2, 6, 10, 9);
  add(2, MaskLevel::kWhole, m2, 0.8);
  add(2, MaskLevel::kWhole, m2, 0.6);
  script(2, m2, "verify", "Answer: Yes\nReasoning: None");
  script(2, m2, "label", "Answer: Grass");
  script(2, m2, "ground", "Answer: Background");

  // img3: one No, one Unsure with reasoning.
  const InstanceMask m3a = rect_mask(1, 1, 6, 6);
  const InstanceMask m3b = rect_mask(12, 12, 9, 7);
  add(3, MaskLevel::kWhole, m3a, 0.7);
  add(3, MaskLevel::kWhole, m3b, 0.7);
  script(3, m3a, "verify", "Answer: No\nReasoning: None");
  script(3, m3b, "verify", "Answer: Unsure\nReasoning: partially visible");

  // img4: garbled verify degrades to Unsure; over-long label is dropped.
  const InstanceMask m4a = rect_mask(3, 9, 7, 7);
  const InstanceMask m4b = rect_mask(13, 2, 8, 10);
  add(4, MaskLevel::kWhole, m4a, 0.9);
  add(4, MaskLevel::kWhole, m4b, 0.9);
  script(4, m4a, "verify", "maybe??");
  script(4, m4b, "verify", "Answer: Yes\nReasoning: None");
  script(4, m4b, "label", "Answer: a large brown dog");

  // img5: emitted, but grounding is garbled (label excluded from anchors).
  const InstanceMask m5 = rect_mask(6, 3, 12, 14);
  add(5, MaskLevel::kWhole, m5, 0.95);
  script(5, m5, "verify", "Answer: Yes\nReasoning: None");
  script(5, m5, "label", "Answer: Snow Board ");
  script(5, m5, "ground", "dunno");

  c.expect_emitted = 3;
  c.expect_no = 1;
  c.expect_unsure = 2;
  c.expect_parse_dropped = 1;
  c.expect_filtered = 2;
  return c;
}

void write_manifest(const MockCorpus& corpus, const fs::path& path) {
  std::string body;
  for (const auto& [step, hash, text] : corpus.script) {
    json j = {{"step", step}, {"crop_sha256", hash}, {"response_text", text}};
    body += j.dump();
    body += "\n";
  }
  write_file_atomic(path, body);
}

fs::path write_corpus_files(const MockCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir / "images");
  for (const auto& [id, img] : corpus.images) {
    write_png(img, dir / "images" / ("img" + std::to_string(id) + ".png"));
  }
  emit_coco(corpus.dataset, dir / "coco.json");
  json split = {{"base", corpus.dataset.base_classes},
                {"novel", corpus.dataset.novel_classes}};
  write_file_atomic(dir / "split.json", split.dump(2) + "\n");
  save_proposals(corpus.proposals, dir / "proposals.jsonl");
  write_manifest(corpus, dir / "manifest.jsonl");

  std::string config_text =
      "[dataset]\n"
      "coco = \"coco.json\"\n"
      "split = \"split.json\"\n"
      "image_root = \"images\"\n"
      "[proposals]\n"
      "file = \"proposals.jsonl\"\n"
      "[backend]\n"
      "kind = \"mock\"\n"
      "manifest = \"manifest.jsonl\"\n"
      "[preprocess]\n"
      "mode = \"soft\"\n"
      "ksize = 7\n"
      "sigma = 0.0\n"
      "[thresholds]\n"
      "anchor_mode = \"MIN\"\n"
      "[output]\n"
      "dir = \"out\"\n";
  write_file_atomic(dir / "config.toml", config_text);
  return dir / "config.toml";
}

}  // namespace ovpl::testing
