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
#include <stdexcept>
#include <string>
#include <vector>

namespace ovpl {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Embedding = std::vector<double>;

struct Bag {
  Embedding text_embedding;
  Embedding image_embedding;
  int region_count = 0;
};

struct BackgroundConcept {
  std::string label;
  Embedding embedding;
};

// Concept embeddings plus their arithmetic mean, the initialization of the
// learnable background prior.
class BackgroundBank {
 public:
  BackgroundBank() = default;
  explicit BackgroundBank(std::vector<BackgroundConcept> concepts);

  const std::vector<BackgroundConcept>& concepts() const { return concepts_; }
  size_t size() const { return concepts_.size(); }
  bool empty() const { return concepts_.empty(); }
  // Throws on an empty bank.
  const Embedding& mean() const;

  void add(BackgroundConcept entry);
  void set_embedding(size_t index, Embedding embedding);

 private:
  void recompute_mean();
  std::vector<BackgroundConcept> concepts_;
  Embedding mean_;
};

struct Temperatures {
  double tau_bag = 30.0;       // τ′; no value given upstream, configurable
  double tau_bg = 5.0;         // τ″
  double tau_cls = 30.0;       // τ for classification probability
  double tau_individual = 30.0;

  void validate() const;
};

// dot(a,b) / (|a||b|); throws on zero vectors or dimension mismatch.
double cosine(const Embedding& a, const Embedding& b);

// Componentwise arithmetic mean; throws on empty input.
Embedding mean_background(const std::vector<Embedding>& concepts);

// Softmax-style alignment probabilities. The denominator runs over all bags
// at tau_bag plus all background concepts at tau_bg; evaluated with
// max-subtraction.
double p_tv(size_t k, const std::vector<Bag>& bags, const BackgroundBank& bank,
            const Temperatures& temps);
double p_vt(size_t k, const std::vector<Bag>& bags, const BackgroundBank& bank,
            const Temperatures& temps);

// Symmetric InfoNCE over the bags: -(1/2) Σ_k (log p_tv^k + log p_vt^k).
double cbl_bag_loss(const std::vector<Bag>& bags, const BackgroundBank& bank,
                    const Temperatures& temps);

// Same objective without background negatives.
double baseline_bag_loss(const std::vector<Bag>& bags,
                         const Temperatures& temps);

// Symmetric InfoNCE over teacher/student region pairs.
double individual_loss(const std::vector<Embedding>& teacher,
                       const std::vector<Embedding>& student,
                       const Temperatures& temps);

// Softmax over tau_cls-scaled cosine similarities to category embeddings.
std::vector<double> classification_prob(
    const Embedding& text_embedding,
    const std::vector<Embedding>& category_embeddings, double tau_cls);

struct CblGradients {
  std::vector<Embedding> d_text;        // per bag, w.r.t. f_t^k
  std::vector<Embedding> d_image;       // per bag, w.r.t. f_v^k
  std::vector<Embedding> d_background;  // per concept, w.r.t. f_bg^j
};

CblGradients grad_cbl_bag_loss(const std::vector<Bag>& bags,
                               const BackgroundBank& bank,
                               const Temperatures& temps);

struct DescentResult {
  BackgroundBank bank;
  std::vector<double> loss_trace;  // loss before each step plus final
};

// Plain gradient descent on the background entry embeddings only; bags
// stay fixed.
DescentResult gradient_descent_background(const BackgroundBank& bank,
                                          const std::vector<Bag>& bags,
                                          const Temperatures& temps, int steps,
                                          double lr);

struct NamedEmbedding {
  std::string id;
  Embedding vector;
};

// JSONL {"id": str, "dim": int, "vector": [f64...]}; enforces a uniform
// dimension across lines.
std::vector<NamedEmbedding> load_embedding_file(
    const std::filesystem::path& path);
void save_embedding_file(const std::vector<NamedEmbedding>& embeddings,
                         const std::filesystem::path& path);

}  // namespace ovpl
