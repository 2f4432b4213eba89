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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ovpl/prompts.hpp"

namespace ovpl {

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BackendRequest {
  CotStep step = CotStep::kVerify;
  std::string prompt;
  std::vector<uint8_t> image_png;
  std::string crop_sha256;  // content hash of the crop behind image_png
};

struct BackendResponse {
  std::string text;
  double latency_ms = 0.0;
  std::string backend_id;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws BackendError on transport failure.
  virtual BackendResponse query(const BackendRequest& request) = 0;
  virtual std::string id() const = 0;
};

// POST {prompt, image (base64), step} -> {text}.
struct HttpBackendConfig {
  std::string base_url;
  std::string path = "/v1/query";
  int timeout_seconds = 120;
};

std::unique_ptr<Backend> make_http_backend(const HttpBackendConfig& config);

// Scripted responses keyed by (step, crop_sha256), loaded from a JSONL
// manifest: {"step": "verify"|"label"|"ground", "crop_sha256": ..,
// "response_text": ..}. A "*" hash matches any crop for that step.
std::unique_ptr<Backend> make_mock_backend(
    const std::filesystem::path& manifest);

const char* step_name(CotStep step);
CotStep step_from_name(const std::string& name);

// Append-only JSONL transcript of every request/response pair.
class AuditLog {
 public:
  explicit AuditLog(const std::filesystem::path& path);
  void record(const BackendRequest& request, const BackendResponse& response);

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

// Replays a recorded audit log; lookups mirror the mock backend's keying.
std::unique_ptr<Backend> make_replay_backend(
    const std::filesystem::path& audit_log);

}  // namespace ovpl
