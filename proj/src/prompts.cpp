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
#include "ovpl/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <vector>

namespace ovpl {

namespace {

#include "prompt_texts.inc"

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> toks;
  std::istringstream in(s);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

// Strips non-alphabetic wrapping like "Yes." or "(Unsure)".
std::string strip_punct(const std::string& tok) {
  size_t a = 0, b = tok.size();
  while (a < b && !std::isalpha(static_cast<unsigned char>(tok[a]))) ++a;
  while (b > a && !std::isalpha(static_cast<unsigned char>(tok[b - 1]))) --b;
  return tok.substr(a, b - a);
}

// Content after "Answer:" on the first line carrying that prefix, or the
// whole text when the backend omitted the prefix.
std::string answer_payload(const std::string& raw) {
  for (const std::string& line : split_lines(raw)) {
    const std::string lower = to_lower(trim(line));
    if (lower.rfind("answer:", 0) == 0) {
      return trim(line).substr(7);
    }
  }
  return raw;
}

std::string reasoning_payload(const std::string& raw) {
  for (const std::string& line : split_lines(raw)) {
    const std::string lower = to_lower(trim(line));
    if (lower.rfind("reasoning:", 0) == 0) {
      return trim(trim(line).substr(10));
    }
  }
  return "";
}

}  // namespace

const std::string& prompt_text(CotStep step) {
  static const std::string verify = kVerifyPromptText;
  static const std::string label = kLabelPromptText;
  static const std::string ground = kGroundPromptText;
  switch (step) {
    case CotStep::kVerify:
      return verify;
    case CotStep::kLabel:
      return label;
    default:
      return ground;
  }
}

std::string render_prompt(CotStep step,
                          const std::optional<std::string>& label) {
  if (step != CotStep::kGround) {
    if (label) throw ParseError("label slot only exists on the grounding step");
    return prompt_text(step);
  }
  if (!label || label->empty()) {
    throw ParseError("grounding prompt requires a label for <Response>");
  }
  std::string text = prompt_text(step);
  const std::string slot = "<Response>";
  size_t pos = 0;
  while ((pos = text.find(slot, pos)) != std::string::npos) {
    text.replace(pos, slot.size(), *label);
    pos += label->size();
  }
  return text;
}

TernaryVerdict parse_verify_response(const std::string& raw) {
  for (const std::string& tok : tokenize(answer_payload(raw))) {
    const std::string t = to_lower(strip_punct(tok));
    TernaryVerdict v;
    if (t == "yes") {
      v.answer = TernaryAnswer::kYes;
    } else if (t == "no") {
      v.answer = TernaryAnswer::kNo;
    } else if (t == "unsure") {
      v.answer = TernaryAnswer::kUnsure;
      const std::string reason = reasoning_payload(raw);
      if (!reason.empty() && to_lower(reason) != "none") v.reasoning = reason;
    } else {
      continue;
    }
    return v;
  }
  throw ParseError("no Yes/No/Unsure token in response", raw);
}

std::string parse_label_response(const std::string& raw) {
  const std::vector<std::string> words = tokenize(answer_payload(raw));
  if (words.empty()) throw ParseError("empty label answer", raw);
  if (words.size() > 2) throw ParseError("label exceeds two words", raw);
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += to_lower(w);
  }
  return out;
}

Grounding parse_ground_response(const std::string& raw) {
  for (const std::string& tok : tokenize(answer_payload(raw))) {
    const std::string t = to_lower(strip_punct(tok));
    if (t == "foreground") return Grounding::kForeground;
    if (t == "background") return Grounding::kBackground;
  }
  throw ParseError("no Foreground/Background token in response", raw);
}

}  // namespace ovpl
