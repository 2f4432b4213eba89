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
#include <cmath>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"

#include "ovpl/anchors.hpp"
#include "ovpl/cbl.hpp"
#include "ovpl/coco_io.hpp"
#include "ovpl/config.hpp"
#include "ovpl/eval.hpp"
#include "ovpl/hash.hpp"
#include "ovpl/pipeline.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace ovpl;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct GlobalFlags {
  std::string config_path;
  std::string out_dir_override;
  std::string backend_override;
  int jobs_override = 0;
};

RunConfig load_config_or_die(const GlobalFlags& flags) {
  if (flags.config_path.empty()) {
    throw ConfigError("--config is required for this command");
  }
  RunConfig cfg = load_run_config(flags.config_path);
  if (!flags.out_dir_override.empty()) cfg.out_dir = flags.out_dir_override;
  if (!flags.backend_override.empty()) {
    if (flags.backend_override == "http") {
      cfg.backend_kind = BackendKind::kHttp;
    } else if (flags.backend_override == "mock") {
      cfg.backend_kind = BackendKind::kMock;
    } else {
      throw ConfigError("--backend must be http or mock");
    }
  }
  if (flags.jobs_override > 0) {
    cfg.pipeline.max_in_flight = flags.jobs_override;
  }
  return cfg;
}

std::unique_ptr<Backend> open_backend(const RunConfig& cfg) {
  if (cfg.backend_kind == BackendKind::kHttp) {
    if (cfg.endpoint.empty()) {
      throw ConfigError("backend.endpoint is required for the http backend");
    }
    HttpBackendConfig http;
    http.base_url = cfg.endpoint;
    http.timeout_seconds = cfg.timeout_seconds;
    return make_http_backend(http);
  }
  if (cfg.manifest_path.empty() || !fs::exists(cfg.manifest_path)) {
    throw ConfigError("mock backend manifest not found: " +
                      cfg.manifest_path.string());
  }
  return make_mock_backend(cfg.manifest_path);
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.coco_path.empty() || !fs::exists(cfg.coco_path)) {
    throw ConfigError("dataset.coco not found: " + cfg.coco_path.string());
  }
  Dataset ds = parse_coco(cfg.coco_path);
  if (!cfg.split_path.empty()) {
    if (!fs::exists(cfg.split_path)) {
      throw ConfigError("dataset.split not found: " + cfg.split_path.string());
    }
    load_category_split(cfg.split_path, ds);
  }
  return ds;
}

// Serialized pipeline label results; consumed by `filter` and `stats`.
json labels_json(const PipelineOutput& out) {
  json j;
  j["histogram"] = out.label_histogram;
  j["foreground_votes"] = out.foreground_votes;
  j["background_votes"] = out.background_votes;
  j["background_labels"] = out.background_labels;
  j["grounding_excluded"] = out.grounding_excluded;
  j["counters"] = {{"input_proposals", out.counters.input_proposals},
                   {"filtered", out.counters.filtered},
                   {"emitted", out.counters.emitted},
                   {"discarded_no", out.counters.discarded_no},
                   {"discarded_unsure", out.counters.discarded_unsure},
                   {"parse_dropped", out.counters.parse_dropped}};
  return j;
}

int cmd_generate(const GlobalFlags& flags) {
  const RunConfig cfg = load_config_or_die(flags);
  Dataset ds = load_dataset(cfg);
  if (cfg.proposal_path.empty() || !fs::exists(cfg.proposal_path)) {
    throw ConfigError("proposals.file not found: " +
                      cfg.proposal_path.string());
  }
  const std::vector<MaskProposal> proposals = load_proposals(cfg.proposal_path);
  std::unique_ptr<Backend> backend = open_backend(cfg);
  fs::create_directories(cfg.out_dir);
  AuditLog audit(cfg.out_dir / "audit_log.jsonl");

  const PipelineOutput out = run_pipeline(ds, proposals, *backend,
                                          cfg.pipeline, cfg.image_root,
                                          &audit);
  Dataset pseudo;
  pseudo.images = ds.images;
  pseudo.annotations = out.pseudo_annotations;
  emit_coco(pseudo, cfg.out_dir / "pseudo_annotations.json");
  write_unsure_log(out.unsure_log, cfg.out_dir / "unsure_log.jsonl");
  write_file_atomic(cfg.out_dir / "labels.json", labels_json(out).dump(2) + "\n");
  std::cout << "proposals " << out.counters.input_proposals << "  emitted "
            << out.counters.emitted << "  no " << out.counters.discarded_no
            << "  unsure " << out.counters.discarded_unsure << "  dropped "
            << out.counters.parse_dropped << "  filtered "
            << out.counters.filtered << "\n";
  return kExitOk;
}

PipelineOutput load_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open labels file " + path.string());
  json j = json::parse(in);
  PipelineOutput out;
  out.label_histogram = j.at("histogram").get<std::map<std::string, int64_t>>();
  out.foreground_votes =
      j.at("foreground_votes").get<std::map<std::string, int64_t>>();
  out.background_votes =
      j.at("background_votes").get<std::map<std::string, int64_t>>();
  out.background_labels =
      j.at("background_labels").get<std::set<std::string>>();
  out.grounding_excluded =
      j.at("grounding_excluded").get<std::set<std::string>>();
  for (int64_t i = 0; i < j.at("counters").at("discarded_unsure").get<int64_t>();
       ++i) {
    out.unsure_log.push_back({});
  }
  return out;
}

int cmd_filter(const GlobalFlags& flags) {
  const RunConfig cfg = load_config_or_die(flags);
  Dataset ds = load_dataset(cfg);
  const fs::path labels_path = cfg.out_dir / "labels.json";
  const PipelineOutput out = load_labels(labels_path);

  const int64_t threshold = cfg.anchor_mode == ThresholdMode::kAll
                                ? 0
                                : min_base_threshold(ds);
  const SemanticAnchorSet anchors =
      filter_anchors(out.label_histogram, majority_grounding(out), threshold);
  save_anchor_set(anchors, cfg.out_dir / "anchors.json");

  const std::set<std::string> open_world =
      merge_open_world_base(ds.base_classes, anchors);
  json ow = {{"threshold", threshold}, {"categories", open_world}};
  write_file_atomic(cfg.out_dir / "open_world_base.json", ow.dump(2) + "\n");

  const fs::path pseudo_path = cfg.out_dir / "pseudo_annotations.json";
  if (fs::exists(pseudo_path) && !ds.novel_classes.empty()) {
    Dataset pseudo = parse_coco(pseudo_path);
    pseudo.annotations =
        cbl_plus_plus_filter(pseudo.annotations, ds.novel_classes);
    emit_coco(pseudo, cfg.out_dir / "pseudo_annotations_cblpp.json");
  }
  std::cout << "threshold " << threshold << "  foreground "
            << anchors.foreground.size() << "  background "
            << anchors.background.size() << "  outliers "
            << anchors.outliers.size() << "\n";
  return kExitOk;
}

int cmd_stats(const GlobalFlags& flags) {
  const RunConfig cfg = load_config_or_die(flags);
  const PipelineOutput out = load_labels(cfg.out_dir / "labels.json");
  std::map<std::string, std::set<std::string>> vocabs;
  if (!cfg.split_path.empty() && fs::exists(cfg.split_path)) {
    Dataset ds;
    load_category_split(cfg.split_path, ds);
    std::set<std::string> all = ds.base_classes;
    all.insert(ds.novel_classes.begin(), ds.novel_classes.end());
    vocabs["benchmark"] = all;
  }
  const StatsReport report = stats_report(out, vocabs);
  std::cout << stats_report_text(report);
  write_file_atomic(cfg.out_dir / "stats.json", stats_report_json(report));
  return kExitOk;
}

std::vector<Bag> load_bags(const fs::path& text_path,
                           const fs::path& image_path) {
  const auto text = load_embedding_file(text_path);
  const auto image = load_embedding_file(image_path);
  if (text.size() != image.size()) {
    throw NumericError("bag text/image files disagree on count");
  }
  std::vector<Bag> bags(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    bags[i].text_embedding = text[i].vector;
    bags[i].image_embedding = image[i].vector;
  }
  return bags;
}

BackgroundBank load_bank(const fs::path& path) {
  std::vector<BackgroundConcept> concepts;
  for (const NamedEmbedding& ne : load_embedding_file(path)) {
    concepts.push_back({ne.id, ne.vector});
  }
  return BackgroundBank(std::move(concepts));
}

int cmd_loss(const GlobalFlags& flags) {
  const RunConfig cfg = load_config_or_die(flags);
  const std::vector<Bag> bags = load_bags(cfg.bags_text_path,
                                          cfg.bags_image_path);
  BackgroundBank bank;
  if (!cfg.bank_path.empty() && fs::exists(cfg.bank_path)) {
    bank = load_bank(cfg.bank_path);
  }
  const double cbl = cbl_bag_loss(bags, bank, cfg.temps);
  const double baseline = baseline_bag_loss(bags, cfg.temps);
  json j = {{"cbl_bag_loss", cbl},
            {"baseline_bag_loss", baseline},
            {"bags", bags.size()},
            {"background_concepts", bank.size()}};
  std::cout << "cbl_bag_loss " << cbl << "\nbaseline_bag_loss " << baseline
            << "\n";
  fs::create_directories(cfg.out_dir);
  write_file_atomic(cfg.out_dir / "loss.json", j.dump(2) + "\n");
  return kExitOk;
}

// Central finite differences over every coordinate.
double gradcheck_max_rel_err(const std::vector<Bag>& bags,
                             const BackgroundBank& bank,
                             const Temperatures& temps, double h) {
  const CblGradients grads = grad_cbl_bag_loss(bags, bank, temps);
  double max_rel = 0.0;
  auto check = [&](auto mutate, double analytic) {
    std::vector<Bag> b1 = bags, b2 = bags;
    BackgroundBank k1 = bank, k2 = bank;
    mutate(b1, k1, +h);
    mutate(b2, k2, -h);
    const double fd =
        (cbl_bag_loss(b1, k1, temps) - cbl_bag_loss(b2, k2, temps)) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
    max_rel = std::max(max_rel, std::abs(fd - analytic) / denom);
  };
  const size_t d = bags.front().text_embedding.size();
  for (size_t k = 0; k < bags.size(); ++k) {
    for (size_t i = 0; i < d; ++i) {
      check(
          [k, i](std::vector<Bag>& b, BackgroundBank&, double eps) {
            b[k].text_embedding[i] += eps;
          },
          grads.d_text[k][i]);
      check(
          [k, i](std::vector<Bag>& b, BackgroundBank&, double eps) {
            b[k].image_embedding[i] += eps;
          },
          grads.d_image[k][i]);
    }
  }
  for (size_t j = 0; j < bank.size(); ++j) {
    for (size_t i = 0; i < d; ++i) {
      check(
          [j, i](std::vector<Bag>&, BackgroundBank& bk, double eps) {
            Embedding e = bk.concepts()[j].embedding;
            e[i] += eps;
            bk.set_embedding(j, std::move(e));
          },
          grads.d_background[j][i]);
    }
  }
  return max_rel;
}

int cmd_gradcheck(const GlobalFlags& flags) {
  Temperatures temps;
  std::vector<Bag> bags;
  BackgroundBank bank;
  if (!flags.config_path.empty()) {
    const RunConfig cfg = load_config_or_die(flags);
    temps = cfg.temps;
    bags = load_bags(cfg.bags_text_path, cfg.bags_image_path);
    if (!cfg.bank_path.empty() && fs::exists(cfg.bank_path)) {
      bank = load_bank(cfg.bank_path);
    }
  } else {
    // Built-in deterministic fixture: G=3, M=2, d=8.
    std::mt19937 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    auto vec = [&](size_t d) {
      Embedding e(d);
      for (double& x : e) x = dist(rng);
      return e;
    };
    for (int k = 0; k < 3; ++k) {
      bags.push_back(Bag{vec(8), vec(8), 4});
    }
    bank.add({"sky", vec(8)});
    bank.add({"grass", vec(8)});
    temps.tau_bag = 3.0;
    temps.tau_bg = 2.0;
  }
  const double max_rel = gradcheck_max_rel_err(bags, bank, temps, 1e-5);
  std::cout << "max rel err " << max_rel
            << (max_rel <= 1e-5 ? " <= 1e-5\n" : " > 1e-5\n");
  return max_rel <= 1e-5 ? kExitOk : kExitRuntime;
}

int cmd_eval(const GlobalFlags& flags, const std::string& detections_path,
             const std::string& subset_name) {
  const RunConfig cfg = load_config_or_die(flags);
  Dataset ds = load_dataset(cfg);
  Subset subset = Subset::kAll;
  if (subset_name == "crowded") subset = Subset::kCrowded;
  else if (subset_name == "occluded") subset = Subset::kOccluded;
  else if (subset_name != "all") {
    throw ConfigError("subset must be all, crowded, or occluded");
  }
  std::set<std::string> class_set = ds.novel_classes;
  if (class_set.empty()) {
    for (const Annotation& a : ds.annotations) class_set.insert(a.category);
  }
  EvalReport report;
  if (detections_path.empty()) {
    report = pseudo_label_quality(ds, subset, cfg.eval);
  } else {
    const std::vector<Detection> dets = load_detections(detections_path);
    report = subset_eval(dets, ds, subset, class_set, cfg.eval);
  }
  std::cout << report_text(report);
  fs::create_directories(cfg.out_dir);
  write_file_atomic(cfg.out_dir / ("eval_" + report.subset + ".json"),
                    report_json(report));
  return kExitOk;
}

int cmd_preprocess_dump(const GlobalFlags& flags) {
  const RunConfig cfg = load_config_or_die(flags);
  Dataset ds = load_dataset(cfg);
  const std::vector<MaskProposal> proposals = load_proposals(cfg.proposal_path);
  fs::create_directories(cfg.out_dir);
  int index = 0;
  for (const MaskProposal& p : select_whole_masks(proposals,
                                                  cfg.pipeline.dedup_iou)) {
    const ImageInfo* info = ds.find_image(p.image_id);
    if (!info) throw ConfigError("proposal references unknown image");
    const ImageBuffer img = read_image(cfg.image_root / info->file_name);
    const BBox box = tight_bbox(p.mask);
    ImageBuffer crop;
    switch (cfg.pipeline.crop_mode) {
      case CropMode::kRaw:
        crop = raw_box_crop(img, box);
        break;
      case CropMode::kHard:
        crop = hard_mask_crop(img, box, p.mask);
        break;
      case CropMode::kSoft:
        crop = soft_mask_crop(img, box, p.mask, cfg.pipeline.blur_ksize,
                              cfg.pipeline.blur_sigma);
        break;
    }
    write_png(crop, cfg.out_dir / ("crop_" + std::to_string(p.image_id) + "_" +
                                   std::to_string(index++) + ".png"));
  }
  std::cout << "dumped " << index << " crops\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open-vocabulary pseudo-label pipeline"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "TOML run configuration");
  app.add_option("--out-dir", flags.out_dir_override, "output directory");
  app.add_option("--backend", flags.backend_override,
                 "backend override: http or mock");
  app.add_option("--jobs", flags.jobs_override, "max in-flight backend calls");

  auto* generate = app.add_subcommand("generate", "run the CoT pipeline");
  auto* filter = app.add_subcommand("filter", "build semantic anchors");
  auto* stats = app.add_subcommand("stats", "pseudo-label statistics");
  auto* loss = app.add_subcommand("loss", "evaluate the contrastive loss");
  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  auto* eval_cmd = app.add_subcommand("eval", "AP50 evaluation");
  std::string detections_path, subset_name = "all";
  eval_cmd->add_option("--detections", detections_path,
                       "COCO results JSON (defaults to pseudo annotations)");
  eval_cmd->add_option("--subset", subset_name, "all, crowded, or occluded");
  auto* dump = app.add_subcommand("preprocess-dump", "dump processed crops");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(flags);
    if (filter->parsed()) return cmd_filter(flags);
    if (stats->parsed()) return cmd_stats(flags);
    if (loss->parsed()) return cmd_loss(flags);
    if (gradcheck->parsed()) return cmd_gradcheck(flags);
    if (eval_cmd->parsed()) return cmd_eval(flags, detections_path, subset_name);
    if (dump->parsed()) return cmd_preprocess_dump(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
