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
#include "ovpl/cbl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "ovpl/coco_io.hpp"

namespace ovpl {

using nlohmann::json;
namespace fs = std::filesystem;

BackgroundBank::BackgroundBank(std::vector<BackgroundConcept> concepts)
    : concepts_(std::move(concepts)) {
  recompute_mean();
}

const Embedding& BackgroundBank::mean() const {
  if (concepts_.empty()) throw NumericError("mean of empty background bank");
  return mean_;
}

void BackgroundBank::add(BackgroundConcept entry) {
  if (!concepts_.empty() &&
      entry.embedding.size() != concepts_.front().embedding.size()) {
    throw NumericError("background entry dimension mismatch");
  }
  concepts_.push_back(std::move(entry));
  recompute_mean();
}

void BackgroundBank::set_embedding(size_t index, Embedding embedding) {
  if (embedding.size() != concepts_.at(index).embedding.size()) {
    throw NumericError("background entry dimension mismatch");
  }
  concepts_[index].embedding = std::move(embedding);
  recompute_mean();
}

void BackgroundBank::recompute_mean() {
  if (concepts_.empty()) {
    mean_.clear();
    return;
  }
  std::vector<Embedding> vecs;
  vecs.reserve(concepts_.size());
  for (const BackgroundConcept& c : concepts_) vecs.push_back(c.embedding);
  mean_ = mean_background(vecs);
}

void Temperatures::validate() const {
  if (tau_bag <= 0 || tau_bg <= 0 || tau_cls <= 0 || tau_individual <= 0) {
    throw NumericError("temperatures must be strictly positive");
  }
}

namespace {

double norm(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_dims(const std::vector<Bag>& bags, const BackgroundBank& bank) {
  if (bags.empty()) throw NumericError("need at least one bag");
  const size_t d = bags.front().text_embedding.size();
  for (const Bag& b : bags) {
    if (b.text_embedding.size() != d || b.image_embedding.size() != d) {
      throw NumericError("bag embedding dimension mismatch");
    }
  }
  for (const BackgroundConcept& c : bank.concepts()) {
    if (c.embedding.size() != d) {
      throw NumericError("background embedding dimension mismatch");
    }
  }
}

// log p for the softmax entry `target` among `logits`, max-subtracted.
double log_softmax_at(const std::vector<double>& logits, size_t target) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  return (logits[target] - m) - std::log(z);
}

// Logits for the t->v (or v->t) softmax of bag k.
std::vector<double> side_logits(size_t k, bool text_side,
                                const std::vector<Bag>& bags,
                                const BackgroundBank& bank,
                                const Temperatures& temps) {
  const Embedding& anchor =
      text_side ? bags[k].text_embedding : bags[k].image_embedding;
  std::vector<double> logits;
  logits.reserve(bags.size() + bank.size());
  for (const Bag& b : bags) {
    const Embedding& other = text_side ? b.image_embedding : b.text_embedding;
    logits.push_back(temps.tau_bag * cosine(anchor, other));
  }
  for (const BackgroundConcept& c : bank.concepts()) {
    logits.push_back(temps.tau_bg * cosine(anchor, c.embedding));
  }
  return logits;
}

// d cos(a,b) / d a = b/(|a||b|) - cos(a,b) * a/|a|^2
void accumulate_cosine_grad(const Embedding& a, const Embedding& b,
                            double coeff, Embedding& out) {
  const double na = norm(a), nb = norm(b);
  const double c = dot(a, b) / (na * nb);
  const double inv = 1.0 / (na * nb);
  const double self = c / (na * na);
  for (size_t i = 0; i < a.size(); ++i) {
    out[i] += coeff * (b[i] * inv - self * a[i]);
  }
}

}  // namespace

double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw NumericError("cosine: dimension mismatch");
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine: zero vector");
  return dot(a, b) / (na * nb);
}

Embedding mean_background(const std::vector<Embedding>& concepts) {
  if (concepts.empty()) throw NumericError("mean_background: no concepts");
  const size_t d = concepts.front().size();
  Embedding out(d, 0.0);
  for (const Embedding& c : concepts) {
    if (c.size() != d) throw NumericError("mean_background: dim mismatch");
    for (size_t i = 0; i < d; ++i) out[i] += c[i];
  }
  for (double& x : out) x /= static_cast<double>(concepts.size());
  return out;
}

double p_tv(size_t k, const std::vector<Bag>& bags, const BackgroundBank& bank,
            const Temperatures& temps) {
  temps.validate();
  check_dims(bags, bank);
  return std::exp(log_softmax_at(side_logits(k, true, bags, bank, temps), k));
}

double p_vt(size_t k, const std::vector<Bag>& bags, const BackgroundBank& bank,
            const Temperatures& temps) {
  temps.validate();
  check_dims(bags, bank);
  return std::exp(log_softmax_at(side_logits(k, false, bags, bank, temps), k));
}

double cbl_bag_loss(const std::vector<Bag>& bags, const BackgroundBank& bank,
                    const Temperatures& temps) {
  temps.validate();
  check_dims(bags, bank);
  double loss = 0.0;
  for (size_t k = 0; k < bags.size(); ++k) {
    loss -= 0.5 * log_softmax_at(side_logits(k, true, bags, bank, temps), k);
    loss -= 0.5 * log_softmax_at(side_logits(k, false, bags, bank, temps), k);
  }
  return loss;
}

double baseline_bag_loss(const std::vector<Bag>& bags,
                         const Temperatures& temps) {
  return cbl_bag_loss(bags, BackgroundBank{}, temps);
}

double individual_loss(const std::vector<Embedding>& teacher,
                       const std::vector<Embedding>& student,
                       const Temperatures& temps) {
  if (teacher.size() != student.size()) {
    throw NumericError("individual_loss: length mismatch");
  }
  std::vector<Bag> bags(teacher.size());
  for (size_t i = 0; i < teacher.size(); ++i) {
    bags[i].text_embedding = teacher[i];
    bags[i].image_embedding = student[i];
  }
  Temperatures t = temps;
  t.tau_bag = temps.tau_individual;
  return cbl_bag_loss(bags, BackgroundBank{}, t);
}

std::vector<double> classification_prob(
    const Embedding& text_embedding,
    const std::vector<Embedding>& category_embeddings, double tau_cls) {
  if (category_embeddings.empty()) {
    throw NumericError("classification_prob: no categories");
  }
  if (tau_cls <= 0) throw NumericError("tau_cls must be positive");
  std::vector<double> logits;
  logits.reserve(category_embeddings.size());
  for (const Embedding& c : category_embeddings) {
    logits.push_back(tau_cls * cosine(text_embedding, c));
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  std::vector<double> probs(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - m) / z;
  }
  return probs;
}

CblGradients grad_cbl_bag_loss(const std::vector<Bag>& bags,
                               const BackgroundBank& bank,
                               const Temperatures& temps) {
  temps.validate();
  check_dims(bags, bank);
  const size_t g = bags.size(), m = bank.size();
  const size_t d = bags.front().text_embedding.size();

  CblGradients grads;
  grads.d_text.assign(g, Embedding(d, 0.0));
  grads.d_image.assign(g, Embedding(d, 0.0));
  grads.d_background.assign(m, Embedding(d, 0.0));

  // Softmax weights for both sides. w[k][l] covers bag entries, u[k][j] the
  // background entries; each row sums to 1.
  std::vector<std::vector<double>> w_tv(g), w_vt(g), u_t(g), u_v(g);
  for (size_t k = 0; k < g; ++k) {
    for (bool text_side : {true, false}) {
      const std::vector<double> logits =
          side_logits(k, text_side, bags, bank, temps);
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double l : logits) z += std::exp(l - mx);
      std::vector<double> bagw(g), bgw(m);
      for (size_t l = 0; l < g; ++l) bagw[l] = std::exp(logits[l] - mx) / z;
      for (size_t j = 0; j < m; ++j) {
        bgw[j] = std::exp(logits[g + j] - mx) / z;
      }
      if (text_side) {
        w_tv[k] = std::move(bagw);
        u_t[k] = std::move(bgw);
      } else {
        w_vt[k] = std::move(bagw);
        u_v[k] = std::move(bgw);
      }
    }
  }

  const double half_bag = 0.5 * temps.tau_bag;
  const double half_bg = 0.5 * temps.tau_bg;
  for (size_t k = 0; k < g; ++k) {
    for (size_t l = 0; l < g; ++l) {
      // t->v side, similarity (t_k, v_l).
      const double a_tv = half_bag * (w_tv[k][l] - (k == l ? 1.0 : 0.0));
      accumulate_cosine_grad(bags[k].text_embedding, bags[l].image_embedding,
                             a_tv, grads.d_text[k]);
      accumulate_cosine_grad(bags[l].image_embedding, bags[k].text_embedding,
                             a_tv, grads.d_image[l]);
      // v->t side, similarity (v_k, t_l).
      const double a_vt = half_bag * (w_vt[k][l] - (k == l ? 1.0 : 0.0));
      accumulate_cosine_grad(bags[k].image_embedding, bags[l].text_embedding,
                             a_vt, grads.d_image[k]);
      accumulate_cosine_grad(bags[l].text_embedding, bags[k].image_embedding,
                             a_vt, grads.d_text[l]);
    }
    for (size_t j = 0; j < m; ++j) {
      const Embedding& bg = bank.concepts()[j].embedding;
      const double c_t = half_bg * u_t[k][j];
      accumulate_cosine_grad(bags[k].text_embedding, bg, c_t,
                             grads.d_text[k]);
      accumulate_cosine_grad(bg, bags[k].text_embedding, c_t,
                             grads.d_background[j]);
      const double c_v = half_bg * u_v[k][j];
      accumulate_cosine_grad(bags[k].image_embedding, bg, c_v,
                             grads.d_image[k]);
      accumulate_cosine_grad(bg, bags[k].image_embedding, c_v,
                             grads.d_background[j]);
    }
  }
  return grads;
}

DescentResult gradient_descent_background(const BackgroundBank& bank,
                                          const std::vector<Bag>& bags,
                                          const Temperatures& temps, int steps,
                                          double lr) {
  if (steps < 0) throw NumericError("steps must be >= 0");
  DescentResult result;
  result.bank = bank;
  result.loss_trace.push_back(cbl_bag_loss(bags, result.bank, temps));
  for (int s = 0; s < steps; ++s) {
    const CblGradients grads = grad_cbl_bag_loss(bags, result.bank, temps);
    for (size_t j = 0; j < result.bank.size(); ++j) {
      Embedding e = result.bank.concepts()[j].embedding;
      for (size_t i = 0; i < e.size(); ++i) {
        e[i] -= lr * grads.d_background[j][i];
      }
      result.bank.set_embedding(j, std::move(e));
    }
    result.loss_trace.push_back(cbl_bag_loss(bags, result.bank, temps));
  }
  return result;
}

std::vector<NamedEmbedding> load_embedding_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NumericError("cannot open embedding file " + path.string());
  std::vector<NamedEmbedding> out;
  std::string line;
  size_t dim = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw NumericError("bad embedding JSONL: " + std::string(e.what()));
    }
    NamedEmbedding ne;
    ne.id = j.at("id").get<std::string>();
    ne.vector = j.at("vector").get<std::vector<double>>();
    const auto declared = j.at("dim").get<size_t>();
    if (declared != ne.vector.size()) {
      throw NumericError("embedding '" + ne.id + "' dim field disagrees with vector length");
    }
    if (dim == 0) dim = ne.vector.size();
    if (ne.vector.size() != dim) {
      throw NumericError("embedding '" + ne.id + "' breaks dimension uniformity");
    }
    for (double v : ne.vector) {
      if (!std::isfinite(v)) {
        throw NumericError("embedding '" + ne.id + "' has non-finite entry");
      }
    }
    out.push_back(std::move(ne));
  }
  return out;
}

void save_embedding_file(const std::vector<NamedEmbedding>& embeddings,
                         const fs::path& path) {
  std::string body;
  for (const NamedEmbedding& ne : embeddings) {
    json j = {{"id", ne.id}, {"dim", ne.vector.size()}, {"vector", ne.vector}};
    body += j.dump();
    body += "\n";
  }
  write_file_atomic(path, body);
}

}  // namespace ovpl
