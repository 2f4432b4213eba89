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

#include <optional>
#include <string>

#include "ovpl/annotations.hpp"

namespace ovpl {

enum class CotStep { kVerify, kLabel, kGround };

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, std::string raw = {})
      : std::runtime_error(what), raw_text(std::move(raw)) {}
  std::string raw_text;
};

// Verbatim instruction texts. The image travels out-of-band as an attachment;
// the literal "<attach image here>" marker stays in the text. Step 3 carries
// a "<Response>" slot for the step-2 label.
const std::string& prompt_text(CotStep step);

// Renders the prompt for a step. Step 3 requires a label and substitutes it
// into every "<Response>" slot; other steps reject a label argument.
std::string render_prompt(CotStep step,
                          const std::optional<std::string>& label = {});

enum class Grounding { kForeground, kBackground };

// "Answer:" line scan for the first Yes/No/Unsure token (case-insensitive);
// captures the "Reasoning:" line when the answer is Unsure.
TernaryVerdict parse_verify_response(const std::string& raw);

// Lowercases, trims, collapses runs of whitespace; rejects empty or >2-word
// answers.
std::string parse_label_response(const std::string& raw);

Grounding parse_ground_response(const std::string& raw);

}  // namespace ovpl
