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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <random>

#include "doctest.h"

#include "ovpl/anchors.hpp"

using namespace ovpl;
namespace fs = std::filesystem;

namespace {

Annotation gt(int64_t id, const std::string& category) {
  Annotation a;
  a.id = id;
  a.category = category;
  a.bbox = {0, 0, 4, 4};
  return a;
}

}  // namespace

TEST_CASE("min_base_threshold") {
  Dataset d;
  d.base_classes = {"cat", "dog", "bird"};
  d.novel_classes = {"ferret"};
  // cat x3, dog x2, ferret x5 (novel does not count), bird absent.
  int64_t next = 1;
  for (int i = 0; i < 3; ++i) d.annotations.push_back(gt(next++, "cat"));
  for (int i = 0; i < 2; ++i) d.annotations.push_back(gt(next++, "dog"));
  for (int i = 0; i < 5; ++i) d.annotations.push_back(gt(next++, "ferret"));
  CHECK(min_base_threshold(d) == 2);

  // Pseudo annotations must not count either.
  Annotation p = gt(next++, "dog");
  p.provenance = Provenance::kPseudo;
  d.annotations.push_back(p);
  d.annotations.push_back(p);
  CHECK(min_base_threshold(d) == 2);

  Dataset empty;
  empty.base_classes = {"cat"};
  CHECK_THROWS_AS(min_base_threshold(empty), AnnotationError);
}

TEST_CASE("filter_anchors partition") {
  const LabelHistogram hist = {
      {"sky", 10}, {"drawer", 7}, {"smudge", 1}, {"handle", 7}};
  const std::map<std::string, Grounding> grounding = {
      {"sky", Grounding::kBackground},
      {"drawer", Grounding::kForeground},
      {"smudge", Grounding::kForeground}};
  const SemanticAnchorSet anchors = filter_anchors(hist, grounding, 5);
  CHECK(anchors.threshold == 5);
  CHECK(anchors.foreground == std::set<std::string>{"drawer"});
  CHECK(anchors.background == std::set<std::string>{"sky"});
  CHECK(anchors.outliers == std::set<std::string>{"smudge"});
  // "handle" has no grounding entry and lands nowhere.
}

TEST_CASE("filter_anchors partition properties over random histograms") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> count_dist(0, 12);
  std::uniform_int_distribution<int> ground_dist(0, 2);
  const std::vector<std::string> names = {"a", "b", "c", "d", "e",
                                          "f", "g", "h", "i", "j"};
  for (int trial = 0; trial < 500; ++trial) {
    LabelHistogram hist;
    std::map<std::string, Grounding> grounding;
    int with_grounding = 0;
    for (const auto& n : names) {
      const int c = count_dist(rng);
      if (c == 0) continue;
      hist[n] = c;
      const int g = ground_dist(rng);
      if (g == 2) continue;  // simulate a grounding parse failure
      ++with_grounding;
      grounding[n] =
          g == 0 ? Grounding::kForeground : Grounding::kBackground;
    }
    const int64_t threshold = count_dist(rng);
    const SemanticAnchorSet out = filter_anchors(hist, grounding, threshold);

    // The three sets are disjoint and cover exactly the grounded labels
    // plus the below-threshold ones.
    std::set<std::string> all;
    all.insert(out.foreground.begin(), out.foreground.end());
    all.insert(out.background.begin(), out.background.end());
    all.insert(out.outliers.begin(), out.outliers.end());
    CHECK(all.size() == out.foreground.size() + out.background.size() +
                            out.outliers.size());
    for (const auto& [name, count] : hist) {
      const bool below = count < threshold;
      if (below) {
        CHECK(out.outliers.count(name) == 1);
        CHECK(out.foreground.count(name) == 0);
        CHECK(out.background.count(name) == 0);
      } else if (grounding.count(name)) {
        CHECK(out.outliers.count(name) == 0);
        const bool fg = grounding.at(name) == Grounding::kForeground;
        CHECK(out.foreground.count(name) == (fg ? 1u : 0u));
        CHECK(out.background.count(name) == (fg ? 0u : 1u));
      } else {
        CHECK(all.count(name) == 0);
      }
    }
    for (const auto& name : all) CHECK(hist.count(name) == 1);
  }
}

TEST_CASE("majority_grounding") {
  PipelineOutput out;
  out.foreground_votes = {{"drawer", 3}, {"sky", 1}, {"tie", 2}};
  out.background_votes = {{"drawer", 1}, {"sky", 4}, {"tie", 2}, {"grass", 2}};
  const auto g = majority_grounding(out);
  CHECK(g.at("drawer") == Grounding::kForeground);
  CHECK(g.at("sky") == Grounding::kBackground);
  CHECK(g.at("tie") == Grounding::kBackground);  // tie -> background
  CHECK(g.at("grass") == Grounding::kBackground);
}

TEST_CASE("merge_open_world_base") {
  SemanticAnchorSet anchors;
  anchors.foreground = {"drawer", "cat"};
  anchors.background = {"sky"};
  anchors.outliers = {"smudge"};
  const std::set<std::string> base = {"cat", "dog"};
  const auto merged = merge_open_world_base(base, anchors);
  CHECK(merged == std::set<std::string>{"cat", "dog", "drawer"});
}

TEST_CASE("cbl_plus_plus_filter") {
  std::vector<Annotation> anns;
  Annotation a = gt(1, "drawer");
  a.provenance = Provenance::kPseudo;
  Annotation b = gt(2, "grass");
  b.provenance = Provenance::kPseudo;
  Annotation c = gt(3, "drawer");  // ground truth, must survive
  anns = {a, b, c};

  const auto filtered = cbl_plus_plus_filter(anns, {"drawer"});
  REQUIRE(filtered.size() == 2);
  CHECK(filtered[0] == b);
  CHECK(filtered[1] == c);

  // Idempotent.
  CHECK(cbl_plus_plus_filter(filtered, {"drawer"}) == filtered);
  // No novel classes: identity.
  CHECK(cbl_plus_plus_filter(anns, {}) == anns);
}

TEST_CASE("stats_report") {
  PipelineOutput out;
  out.label_histogram = {{"drawer", 4}, {"grass", 2}, {"zebra", 1}};
  out.counters.discarded_unsure = 3;
  const std::map<std::string, std::set<std::string>> vocabs = {
      {"indoor", {"drawer", "lamp"}}, {"safari", {"zebra", "lion"}}};
  const StatsReport r = stats_report(out, vocabs);
  CHECK(r.total_classes == 3);
  CHECK(r.total_annotations == 7);
  CHECK(r.total_unsure == 3);
  REQUIRE(r.benchmarks.size() == 2);
  CHECK(r.benchmarks[0].name == "indoor");
  CHECK(r.benchmarks[0].covered_classes == 1);
  CHECK(r.benchmarks[0].annotations == 4);
  CHECK(r.benchmarks[1].covered_classes == 1);
  CHECK(r.benchmarks[1].annotations == 1);
  CHECK(stats_report_text(r).find("indoor") != std::string::npos);
}

TEST_CASE("anchor set file round trip") {
  SemanticAnchorSet anchors;
  anchors.foreground = {"drawer"};
  anchors.background = {"sky", "grass"};
  anchors.outliers = {"smudge"};
  anchors.threshold = 7;
  const fs::path dir = fs::temp_directory_path() / "ovpl_anchor_io";
  fs::create_directories(dir);
  save_anchor_set(anchors, dir / "anchors.json");
  const SemanticAnchorSet loaded = load_anchor_set(dir / "anchors.json");
  CHECK(loaded.foreground == anchors.foreground);
  CHECK(loaded.background == anchors.background);
  CHECK(loaded.outliers == anchors.outliers);
  CHECK(loaded.threshold == anchors.threshold);
}
