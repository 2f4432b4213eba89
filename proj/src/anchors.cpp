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
#include "ovpl/anchors.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "ovpl/coco_io.hpp"

namespace ovpl {

using nlohmann::json;
namespace fs = std::filesystem;

int64_t min_base_threshold(const Dataset& dataset) {
  std::map<std::string, int64_t> counts;
  for (const Annotation& a : dataset.annotations) {
    if (a.provenance == Provenance::kGroundTruth &&
        dataset.base_classes.count(a.category)) {
      ++counts[a.category];
    }
  }
  if (counts.empty()) {
    throw AnnotationError("min_base_threshold: no base-class annotations");
  }
  int64_t min_count = std::numeric_limits<int64_t>::max();
  for (const auto& [name, c] : counts) min_count = std::min(min_count, c);
  return min_count;
}

SemanticAnchorSet filter_anchors(
    const LabelHistogram& hist,
    const std::map<std::string, Grounding>& grounding, int64_t threshold) {
  SemanticAnchorSet out;
  out.threshold = threshold;
  for (const auto& [label, count] : hist) {
    if (count < threshold) {
      out.outliers.insert(label);
      continue;
    }
    auto it = grounding.find(label);
    if (it == grounding.end()) continue;  // step-3 parse exclusion
    if (it->second == Grounding::kForeground) {
      out.foreground.insert(label);
    } else {
      out.background.insert(label);
    }
  }
  return out;
}

std::map<std::string, Grounding> majority_grounding(
    const PipelineOutput& output) {
  std::map<std::string, Grounding> out;
  std::set<std::string> labels;
  for (const auto& [label, count] : output.foreground_votes)
    labels.insert(label);
  for (const auto& [label, count] : output.background_votes)
    labels.insert(label);
  for (const std::string& label : labels) {
    const auto fg = output.foreground_votes.find(label);
    const auto bg = output.background_votes.find(label);
    const int64_t f = fg == output.foreground_votes.end() ? 0 : fg->second;
    const int64_t b = bg == output.background_votes.end() ? 0 : bg->second;
    out[label] = f > b ? Grounding::kForeground : Grounding::kBackground;
  }
  return out;
}

std::set<std::string> merge_open_world_base(const std::set<std::string>& base,
                                            const SemanticAnchorSet& anchors) {
  std::set<std::string> out = base;
  out.insert(anchors.foreground.begin(), anchors.foreground.end());
  return out;
}

std::vector<Annotation> cbl_plus_plus_filter(
    const std::vector<Annotation>& annotations,
    const std::set<std::string>& novel_classes) {
  std::vector<Annotation> out;
  out.reserve(annotations.size());
  for (const Annotation& a : annotations) {
    if (a.provenance == Provenance::kPseudo && novel_classes.count(a.category)) {
      continue;
    }
    out.push_back(a);
  }
  return out;
}

StatsReport stats_report(
    const PipelineOutput& output,
    const std::map<std::string, std::set<std::string>>& benchmark_vocabs) {
  StatsReport report;
  report.total_classes = static_cast<int64_t>(output.label_histogram.size());
  for (const auto& [label, count] : output.label_histogram) {
    report.total_annotations += count;
  }
  report.total_unsure = output.counters.discarded_unsure;
  for (const auto& [name, vocab] : benchmark_vocabs) {
    BenchmarkStats bs;
    bs.name = name;
    for (const auto& [label, count] : output.label_histogram) {
      if (vocab.count(label)) {
        ++bs.covered_classes;
        bs.annotations += count;
      }
    }
    report.benchmarks.push_back(std::move(bs));
  }
  return report;
}

std::string stats_report_text(const StatsReport& report) {
  std::ostringstream out;
  // Annotation counts cover all pseudo annotations, not only anchor
  // survivors; coverage is exact-match after label normalization.
  out << "pseudo-label statistics (all pseudo annotations)\n";
  out << "  classes      " << report.total_classes << "\n";
  out << "  annotations  " << report.total_annotations << "\n";
  out << "  unsure       " << report.total_unsure << "\n";
  for (const BenchmarkStats& b : report.benchmarks) {
    out << "  [" << b.name << "] classes " << b.covered_classes
        << "  annotations " << b.annotations << "\n";
  }
  return out.str();
}

std::string stats_report_json(const StatsReport& report) {
  json j = {{"classes", report.total_classes},
            {"annotations", report.total_annotations},
            {"unsure", report.total_unsure},
            {"benchmarks", json::array()}};
  for (const BenchmarkStats& b : report.benchmarks) {
    j["benchmarks"].push_back({{"name", b.name},
                               {"classes", b.covered_classes},
                               {"annotations", b.annotations}});
  }
  return j.dump(2) + "\n";
}

void save_anchor_set(const SemanticAnchorSet& anchors, const fs::path& path) {
  json j = {{"threshold", anchors.threshold},
            {"foreground", anchors.foreground},
            {"background", anchors.background},
            {"outliers", anchors.outliers}};
  write_file_atomic(path, j.dump(2) + "\n");
}

SemanticAnchorSet load_anchor_set(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw AnnotationError("cannot open " + path.string());
  json j = json::parse(in);
  SemanticAnchorSet out;
  out.threshold = j.at("threshold").get<int64_t>();
  for (const auto& s : j.at("foreground")) out.foreground.insert(s.get<std::string>());
  for (const auto& s : j.at("background")) out.background.insert(s.get<std::string>());
  for (const auto& s : j.at("outliers")) out.outliers.insert(s.get<std::string>());
  return out;
}

}  // namespace ovpl
