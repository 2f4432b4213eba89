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
#include "ovpl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ovpl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void sort_detections(std::vector<Detection>& detections) {
  std::sort(detections.begin(), detections.end(),
            [](const Detection& a, const Detection& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.id < b.id;
            });
}

// Average precision from per-rank TP flags.
double average_precision(const std::vector<bool>& tp_flags, int64_t num_gt,
                         ApInterpolation interpolation) {
  if (num_gt == 0) return 0.0;
  std::vector<double> precision, recall;
  int64_t tp = 0, fp = 0;
  for (bool is_tp : tp_flags) {
    if (is_tp) {
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / num_gt);
  }
  // Precision envelope (monotone non-increasing from the right).
  std::vector<double> envelope = precision;
  for (int i = static_cast<int>(envelope.size()) - 2; i >= 0; --i) {
    envelope[i] = std::max(envelope[i], envelope[i + 1]);
  }
  if (interpolation == ApInterpolation::kCoco101) {
    double sum = 0.0;
    for (int r = 0; r <= 100; ++r) {
      const double target = r / 100.0;
      // First rank reaching the target recall.
      double p = 0.0;
      for (size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] >= target) {
          p = envelope[i];
          break;
        }
      }
      sum += p;
    }
    return sum / 101.0;
  }
  // Exact area under the envelope.
  double area = 0.0;
  double prev_recall = 0.0;
  for (size_t i = 0; i < recall.size(); ++i) {
    area += (recall[i] - prev_recall) * envelope[i];
    prev_recall = recall[i];
  }
  return area;
}

}  // namespace

MatchResult greedy_match(std::vector<Detection> detections,
                         const std::vector<Annotation>& gts,
                         double iou_threshold) {
  sort_detections(detections);
  MatchResult result;
  result.matched_gt.assign(detections.size(), -1);
  std::vector<bool> gt_taken(gts.size(), false);
  for (size_t di = 0; di < detections.size(); ++di) {
    const Detection& det = detections[di];
    double best_iou = 0.0;
    int best_gt = -1;
    for (size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_taken[gi]) continue;
      if (gts[gi].image_id != det.image_id) continue;
      if (gts[gi].category != det.category) continue;
      const double v = iou(det.bbox, gts[gi].bbox);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0) {
      gt_taken[best_gt] = true;
      result.matched_gt[di] = best_gt;
      ++result.tp;
    } else {
      ++result.fp;
    }
  }
  result.fn = static_cast<int64_t>(gts.size()) - result.tp;
  return result;
}

EvalReport ap50(const std::vector<Detection>& detections,
                const std::vector<Annotation>& gts,
                const std::set<std::string>& class_set,
                const EvalConfig& config) {
  if (class_set.empty()) {
    throw AnnotationError("ap50: empty class set");
  }
  EvalReport report;
  int64_t evaluated_classes = 0;
  double ap_sum = 0.0;
  for (const std::string& cls : class_set) {
    std::vector<Annotation> cls_gts;
    for (const Annotation& g : gts) {
      if (g.category == cls) cls_gts.push_back(g);
    }
    std::vector<Detection> cls_dets;
    for (const Detection& d : detections) {
      if (d.category == cls) cls_dets.push_back(d);
    }
    if (cls_gts.empty()) continue;  // zero-GT classes stay out of the mean
    ++evaluated_classes;

    const MatchResult match =
        greedy_match(cls_dets, cls_gts, config.iou_threshold);
    report.tp += match.tp;
    report.fp += match.fp;
    report.fn += match.fn;

    sort_detections(cls_dets);
    std::vector<bool> tp_flags(cls_dets.size());
    for (size_t i = 0; i < cls_dets.size(); ++i) {
      tp_flags[i] = match.matched_gt[i] >= 0;
    }
    const double ap = average_precision(
        tp_flags, static_cast<int64_t>(cls_gts.size()), config.interpolation);
    report.per_class_ap[cls] = ap;
    ap_sum += ap;
  }
  if (evaluated_classes == 0) {
    report.empty = true;
    return report;
  }
  report.mean_ap = ap_sum / evaluated_classes;
  return report;
}

EvalReport subset_eval(const std::vector<Detection>& detections,
                       const Dataset& dataset, Subset subset,
                       const std::set<std::string>& class_set,
                       const EvalConfig& config) {
  std::vector<Annotation> gts;
  for (const Annotation& a : dataset.annotations) {
    if (a.provenance == Provenance::kGroundTruth) gts.push_back(a);
  }

  if (subset == Subset::kAll) {
    EvalReport r = ap50(detections, gts, class_set, config);
    r.subset = "all";
    return r;
  }

  if (subset == Subset::kCrowded) {
    // Images with strictly more ground-truth objects than the threshold.
    std::map<int64_t, int> counts;
    for (const Annotation& g : gts) ++counts[g.image_id];
    std::set<int64_t> crowded_images;
    for (const auto& [image_id, n] : counts) {
      if (n > config.crowded_threshold) crowded_images.insert(image_id);
    }
    std::vector<Annotation> sub_gts;
    for (const Annotation& g : gts) {
      if (crowded_images.count(g.image_id)) sub_gts.push_back(g);
    }
    std::vector<Detection> sub_dets;
    for (const Detection& d : detections) {
      if (crowded_images.count(d.image_id)) sub_dets.push_back(d);
    }
    if (sub_gts.empty()) {
      EvalReport r;
      r.subset = "crowded";
      r.empty = true;
      return r;
    }
    EvalReport r = ap50(sub_dets, sub_gts, class_set, config);
    r.subset = "crowded";
    return r;
  }

  // Occluded: per-object restriction to novel GTs covered more than the
  // threshold by the other GT boxes of their image.
  std::map<int64_t, std::vector<const Annotation*>> by_image;
  for (const Annotation& g : gts) by_image[g.image_id].push_back(&g);
  std::vector<Annotation> occluded_gts;
  std::vector<Annotation> ignored_gts;  // novel but not occluded
  for (const Annotation& g : gts) {
    if (!dataset.novel_classes.count(g.category)) continue;
    std::vector<BBox> others;
    for (const Annotation* o : by_image[g.image_id]) {
      if (o != &g) others.push_back(o->bbox);
    }
    const bool occluded =
        !others.empty() &&
        coverage_fraction(g.bbox, others) > config.occluded_threshold;
    if (occluded) {
      occluded_gts.push_back(g);
    } else {
      ignored_gts.push_back(g);
    }
  }
  if (occluded_gts.empty()) {
    EvalReport r;
    r.subset = "occluded";
    r.empty = true;
    return r;
  }
  std::vector<Detection> dets = detections;
  if (config.occluded_mode == OccludedIgnoreMode::kIgnore) {
    // Detections landing on an ignored GT drop out of the evaluation.
    std::vector<Detection> kept;
    for (const Detection& d : dets) {
      bool on_ignored = false;
      for (const Annotation& g : ignored_gts) {
        if (g.image_id == d.image_id && g.category == d.category &&
            iou(d.bbox, g.bbox) >= config.iou_threshold) {
          on_ignored = true;
          break;
        }
      }
      if (!on_ignored) kept.push_back(d);
    }
    dets = std::move(kept);
  } else {
    // Ignored GTs stay as unmatched false-negative sources.
    occluded_gts.insert(occluded_gts.end(), ignored_gts.begin(),
                        ignored_gts.end());
  }
  EvalReport r = ap50(dets, occluded_gts, class_set, config);
  r.subset = "occluded";
  return r;
}

std::vector<Detection> pseudo_as_detections(
    const std::vector<Annotation>& annotations) {
  std::vector<Detection> out;
  for (const Annotation& a : annotations) {
    if (a.provenance != Provenance::kPseudo) continue;
    Detection d;
    d.id = a.id;
    d.image_id = a.image_id;
    d.category = a.category;
    d.bbox = a.bbox;
    d.score = 1.0;
    out.push_back(d);
  }
  return out;
}

EvalReport pseudo_label_quality(const Dataset& dataset, Subset subset,
                                const EvalConfig& config) {
  const std::vector<Detection> dets =
      pseudo_as_detections(dataset.annotations);
  return subset_eval(dets, dataset, subset, dataset.novel_classes, config);
}

std::vector<Detection> load_detections(
    const fs::path& path, const std::map<int64_t, std::string>& category_names) {
  std::ifstream in(path);
  if (!in) throw AnnotationError("cannot open " + path.string());
  json root = json::parse(in);
  std::vector<Detection> out;
  int64_t next_id = 1;
  for (const auto& j : root) {
    Detection d;
    d.id = j.value("id", next_id);
    ++next_id;
    d.image_id = j.at("image_id").get<int64_t>();
    if (j.contains("category")) {
      d.category = j["category"].get<std::string>();
    } else {
      const auto cid = j.at("category_id").get<int64_t>();
      auto it = category_names.find(cid);
      if (it == category_names.end()) {
        throw AnnotationError("unknown category_id " + std::to_string(cid));
      }
      d.category = it->second;
    }
    const auto& bb = j.at("bbox");
    d.bbox = BBox{bb[0].get<double>(), bb[1].get<double>(),
                  bb[2].get<double>(), bb[3].get<double>()};
    d.score = j.at("score").get<double>();
    out.push_back(std::move(d));
  }
  return out;
}

std::string report_text(const EvalReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  out << "subset: " << report.subset << "\n";
  if (report.empty) {
    out << "  (no ground truth in subset)\n";
    return out.str();
  }
  for (const auto& [cls, ap] : report.per_class_ap) {
    out << "  " << cls << "  " << 100.0 * ap << "\n";
  }
  out << "  mAP50  " << 100.0 * report.mean_ap << "\n";
  out << "  TP " << report.tp << "  FP " << report.fp << "  FN " << report.fn
      << "\n";
  return out.str();
}

std::string report_json(const EvalReport& report) {
  json j = {{"subset", report.subset},
            {"empty", report.empty},
            {"mean_ap_percent",
             std::round(1000.0 * report.mean_ap) / 10.0},
            {"tp", report.tp},
            {"fp", report.fp},
            {"fn", report.fn},
            {"per_class", json::object()}};
  for (const auto& [cls, ap] : report.per_class_ap) {
    j["per_class"][cls] = std::round(1000.0 * ap) / 10.0;
  }
  return j.dump(2) + "\n";
}

}  // namespace ovpl
