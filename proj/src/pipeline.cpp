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
#include "ovpl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "json.hpp"

#include "ovpl/coco_io.hpp"
#include "ovpl/hash.hpp"

namespace ovpl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* level_name(MaskLevel level) {
  switch (level) {
    case MaskLevel::kWhole:
      return "whole";
    case MaskLevel::kPart:
      return "part";
    default:
      return "subpart";
  }
}

MaskLevel level_from_name(const std::string& name) {
  if (name == "whole") return MaskLevel::kWhole;
  if (name == "part") return MaskLevel::kPart;
  if (name == "subpart") return MaskLevel::kSubPart;
  throw BackendError("unknown proposal level: " + name);
}

}  // namespace

std::vector<MaskProposal> load_proposals(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open proposal file " + path.string());
  std::vector<MaskProposal> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    MaskProposal p;
    p.image_id = j.at("image_id").get<int64_t>();
    p.level = level_from_name(j.at("level").get<std::string>());
    p.stability_score = j.at("score").get<double>();
    const auto& rle = j.at("rle");
    const int h = rle.at("size")[0].get<int>();
    const int w = rle.at("size")[1].get<int>();
    p.mask = rle_counts_to_mask(
        rle.at("counts").get<std::vector<int64_t>>(), w, h);
    out.push_back(std::move(p));
  }
  return out;
}

void save_proposals(const std::vector<MaskProposal>& proposals,
                    const fs::path& path) {
  std::string body;
  for (const MaskProposal& p : proposals) {
    json j = {{"image_id", p.image_id},
              {"level", level_name(p.level)},
              {"score", p.stability_score},
              {"rle",
               {{"size", {p.mask.height, p.mask.width}},
                {"counts", mask_to_rle_counts(p.mask)}}}};
    body += j.dump();
    body += "\n";
  }
  write_file_atomic(path, body);
}

std::vector<MaskProposal> select_whole_masks(
    const std::vector<MaskProposal>& proposals, double dedup_iou) {
  std::vector<MaskProposal> whole;
  for (const MaskProposal& p : proposals) {
    if (p.level == MaskLevel::kWhole) whole.push_back(p);
  }
  // Score-descending pass; survivors suppress later near-duplicates.
  std::vector<size_t> order(whole.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return whole[a].stability_score > whole[b].stability_score;
  });
  std::vector<bool> keep(whole.size(), false);
  std::vector<size_t> kept;
  for (size_t idx : order) {
    bool duplicate = false;
    for (size_t k : kept) {
      if (whole[idx].image_id == whole[k].image_id &&
          mask_iou(whole[idx].mask, whole[k].mask) > dedup_iou) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      keep[idx] = true;
      kept.push_back(idx);
    }
  }
  std::vector<MaskProposal> out;
  for (size_t i = 0; i < whole.size(); ++i) {
    if (keep[i]) out.push_back(whole[i]);
  }
  return out;
}

namespace {

struct ProposalTask {
  size_t order_key = 0;  // position in the deterministic ordering
  int64_t image_id = 0;
  int proposal_index = 0;  // index among this image's selected proposals
  const MaskProposal* proposal = nullptr;
};

enum class Outcome { kEmitted, kNo, kUnsure, kParseDropped };

struct TaskResult {
  Outcome outcome = Outcome::kUnsure;
  std::string label;
  std::optional<Grounding> grounding;
  bool grounding_failed = false;
  TernaryVerdict verdict;
  std::string unsure_reason;
  BBox bbox;
};

ImageBuffer make_crop(const ImageBuffer& img, const MaskProposal& p,
                      const BBox& box, const PipelineConfig& cfg) {
  switch (cfg.crop_mode) {
    case CropMode::kRaw:
      return raw_box_crop(img, box);
    case CropMode::kHard:
      return hard_mask_crop(img, box, p.mask);
    case CropMode::kSoft:
      break;
  }
  if (cfg.crop_before_transform) {
    // Crop first, then grayscale+blur the crop; mask interior restored.
    ImageBuffer crop = raw_box_crop(img, box);
    ImageBuffer soft = gaussian_blur(grayscale(crop), cfg.blur_ksize,
                                     cfg.blur_sigma);
    const int x0 = static_cast<int>(box.x), y0 = static_cast<int>(box.y);
    for (int y = 0; y < crop.height; ++y) {
      for (int x = 0; x < crop.width; ++x) {
        if (!p.mask.at(x + x0, y + y0)) {
          std::copy_n(soft.pixel(x, y), 3, crop.pixel(x, y));
        }
      }
    }
    return crop;
  }
  return soft_mask_crop(img, box, p.mask, cfg.blur_ksize, cfg.blur_sigma);
}

BackendResponse query_with_retry(Backend& backend, const BackendRequest& req,
                                 int max_retries, AuditLog* audit) {
  int attempt = 0;
  for (;;) {
    try {
      BackendResponse res = backend.query(req);
      if (audit) audit->record(req, res);
      return res;
    } catch (const BackendError&) {
      if (++attempt > max_retries) throw;
    }
  }
}

TaskResult process_proposal(const ImageBuffer& img, const MaskProposal& p,
                            Backend& backend, const PipelineConfig& cfg,
                            AuditLog* audit) {
  TaskResult r;
  r.bbox = tight_bbox(p.mask);
  const ImageBuffer crop = make_crop(img, p, r.bbox, cfg);
  const std::vector<uint8_t> png = encode_png(crop);
  const std::string crop_hash = crop_sha256(crop);

  auto ask = [&](CotStep step, const std::optional<std::string>& label) {
    BackendRequest req;
    req.step = step;
    req.prompt = render_prompt(step, label);
    req.image_png = png;
    req.crop_sha256 = crop_hash;
    return query_with_retry(backend, req, cfg.max_retries, audit);
  };

  // Step 1: existence. Transport exhaustion and parse failures both land in
  // the Unsure bucket.
  try {
    r.verdict = parse_verify_response(ask(CotStep::kVerify, {}).text);
  } catch (const BackendError&) {
    r.outcome = Outcome::kUnsure;
    r.unsure_reason = "backend transport failure";
    return r;
  } catch (const ParseError& e) {
    r.outcome = Outcome::kUnsure;
    r.unsure_reason = std::string("unparseable verify response: ") + e.raw_text;
    return r;
  }
  if (r.verdict.answer == TernaryAnswer::kNo) {
    r.outcome = Outcome::kNo;
    return r;
  }
  if (r.verdict.answer == TernaryAnswer::kUnsure) {
    r.outcome = Outcome::kUnsure;
    r.unsure_reason = r.verdict.reasoning.value_or("");
    return r;
  }

  // Step 2: open-vocabulary label.
  try {
    r.label = parse_label_response(ask(CotStep::kLabel, {}).text);
  } catch (const std::exception&) {
    r.outcome = Outcome::kParseDropped;
    return r;
  }

  // Step 3: foreground/background grounding for the label.
  try {
    r.grounding = parse_ground_response(ask(CotStep::kGround, r.label).text);
  } catch (const std::exception&) {
    r.grounding_failed = true;
  }
  r.outcome = Outcome::kEmitted;
  return r;
}

PipelineOutput assemble(const std::vector<ProposalTask>& tasks,
                        const std::vector<TaskResult>& results,
                        int64_t input_count, int64_t filtered) {
  PipelineOutput out;
  out.counters.input_proposals = input_count;
  out.counters.filtered = filtered;
  int64_t next_id = 1;
  for (size_t i = 0; i < tasks.size(); ++i) {
    const ProposalTask& t = tasks[i];
    const TaskResult& r = results[i];
    switch (r.outcome) {
      case Outcome::kNo:
        ++out.counters.discarded_no;
        break;
      case Outcome::kUnsure:
        ++out.counters.discarded_unsure;
        out.unsure_log.push_back(
            UnsureLogEntry{t.image_id, t.proposal_index, r.unsure_reason});
        break;
      case Outcome::kParseDropped:
        ++out.counters.parse_dropped;
        break;
      case Outcome::kEmitted: {
        ++out.counters.emitted;
        Annotation ann;
        ann.id = next_id++;
        ann.image_id = t.image_id;
        ann.category = r.label;
        ann.bbox = r.bbox;
        ann.mask = t.proposal->mask;
        ann.provenance = Provenance::kPseudo;
        ann.verdict = r.verdict;
        out.pseudo_annotations.push_back(std::move(ann));
        ++out.label_histogram[r.label];
        if (r.grounding_failed) {
          out.grounding_excluded.insert(r.label);
        } else if (*r.grounding == Grounding::kForeground) {
          ++out.foreground_votes[r.label];
        } else {
          ++out.background_votes[r.label];
        }
        break;
      }
    }
  }
  // Majority per label; ties go to background.
  for (const auto& [label, count] : out.label_histogram) {
    if (out.grounding_excluded.count(label)) continue;
    const int64_t fg = out.foreground_votes.count(label)
                           ? out.foreground_votes.at(label)
                           : 0;
    const int64_t bg = out.background_votes.count(label)
                           ? out.background_votes.at(label)
                           : 0;
    if (bg >= fg) out.background_labels.insert(label);
  }
  return out;
}

PipelineOutput run_pipeline_impl(
    const Dataset& dataset, const std::vector<MaskProposal>& proposals,
    Backend& backend, const PipelineConfig& config,
    const std::function<const ImageBuffer&(int64_t)>& image_for,
    AuditLog* audit) {
  const std::vector<MaskProposal> selected =
      select_whole_masks(proposals, config.dedup_iou);

  // Deterministic order: ascending image_id, then original proposal order
  // (select_whole_masks preserves it).
  std::vector<ProposalTask> tasks;
  std::vector<size_t> order(selected.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return selected[a].image_id < selected[b].image_id;
  });
  std::map<int64_t, int> per_image_index;
  for (size_t pos = 0; pos < order.size(); ++pos) {
    const MaskProposal& p = selected[order[pos]];
    if (dataset.find_image(p.image_id) == nullptr) {
      throw AnnotationError("proposal references unknown image_id " +
                            std::to_string(p.image_id));
    }
    tasks.push_back(ProposalTask{pos, p.image_id,
                                 per_image_index[p.image_id]++, &p});
  }

  std::vector<TaskResult> results(tasks.size());
  const int workers =
      std::max(1, std::min<int>(config.max_in_flight,
                                static_cast<int>(tasks.size())));
  if (workers <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) {
      results[i] = process_proposal(image_for(tasks[i].image_id),
                                    *tasks[i].proposal, backend, config, audit);
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          results[i] =
              process_proposal(image_for(tasks[i].image_id),
                               *tasks[i].proposal, backend, config, audit);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  return assemble(tasks, results, static_cast<int64_t>(proposals.size()),
                  static_cast<int64_t>(proposals.size() - selected.size()));
}

}  // namespace

PipelineOutput run_pipeline(const Dataset& dataset,
                            const std::vector<MaskProposal>& proposals,
                            Backend& backend, const PipelineConfig& config,
                            const fs::path& image_root, AuditLog* audit) {
  std::map<int64_t, ImageBuffer> cache;
  for (const MaskProposal& p : proposals) {
    if (cache.count(p.image_id)) continue;
    const ImageInfo* info = dataset.find_image(p.image_id);
    if (info == nullptr) {
      throw AnnotationError("proposal references unknown image_id " +
                            std::to_string(p.image_id));
    }
    cache.emplace(p.image_id, read_image(image_root / info->file_name));
  }
  return run_pipeline_in_memory(dataset, proposals, backend, config, cache,
                                audit);
}

PipelineOutput run_pipeline_in_memory(
    const Dataset& dataset, const std::vector<MaskProposal>& proposals,
    Backend& backend, const PipelineConfig& config,
    const std::map<int64_t, ImageBuffer>& images, AuditLog* audit) {
  return run_pipeline_impl(
      dataset, proposals, backend, config,
      [&images](int64_t id) -> const ImageBuffer& {
        auto it = images.find(id);
        if (it == images.end()) {
          throw AnnotationError("no image buffer for image_id " +
                                std::to_string(id));
        }
        return it->second;
      },
      audit);
}

void write_unsure_log(const std::vector<UnsureLogEntry>& entries,
                      const fs::path& path) {
  std::string body;
  for (const UnsureLogEntry& e : entries) {
    json j = {{"image_id", e.image_id},
              {"proposal_index", e.proposal_index},
              {"reasoning", e.reasoning}};
    body += j.dump();
    body += "\n";
  }
  write_file_atomic(path, body);
}

}  // namespace ovpl
