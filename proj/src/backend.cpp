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
#include "ovpl/backend.hpp"

#include <chrono>
#include <fstream>

#include "httplib.h"
#include "json.hpp"

#include "ovpl/hash.hpp"

namespace ovpl {

using nlohmann::json;
namespace fs = std::filesystem;

const char* step_name(CotStep step) {
  switch (step) {
    case CotStep::kVerify:
      return "verify";
    case CotStep::kLabel:
      return "label";
    default:
      return "ground";
  }
}

CotStep step_from_name(const std::string& name) {
  if (name == "verify") return CotStep::kVerify;
  if (name == "label") return CotStep::kLabel;
  if (name == "ground") return CotStep::kGround;
  throw BackendError("unknown step name: " + name);
}

namespace {

std::string base64_encode(std::span<const uint8_t> data) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back(alphabet[v & 63]);
  }
  if (i + 1 == data.size()) {
    const uint32_t v = data[i] << 16;
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == data.size()) {
    const uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {}

  BackendResponse query(const BackendRequest& request) override {
    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    json body = {{"step", step_name(request.step)},
                 {"prompt", request.prompt},
                 {"image", base64_encode(request.image_png)}};
    const auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post(config_.path, body.dump(), "application/json");
    const auto t1 = std::chrono::steady_clock::now();
    if (!res) {
      throw BackendError("transport failure contacting " + config_.base_url);
    }
    if (res->status != 200) {
      throw BackendError("backend returned HTTP " +
                         std::to_string(res->status));
    }
    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw BackendError(std::string("bad backend JSON: ") + e.what());
    }
    if (!parsed.contains("text")) {
      throw BackendError("backend response missing 'text'");
    }
    BackendResponse out;
    out.text = parsed["text"].get<std::string>();
    out.latency_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.backend_id = id();
    return out;
  }

  std::string id() const override { return "http:" + config_.base_url; }

 private:
  HttpBackendConfig config_;
};

class ScriptedBackend : public Backend {
 public:
  ScriptedBackend(std::string backend_id,
                  std::map<std::pair<std::string, std::string>, std::string>
                      responses)
      : id_(std::move(backend_id)), responses_(std::move(responses)) {}

  BackendResponse query(const BackendRequest& request) override {
    const std::string step = step_name(request.step);
    auto it = responses_.find({step, request.crop_sha256});
    if (it == responses_.end()) it = responses_.find({step, "*"});
    if (it == responses_.end()) {
      throw BackendError("no scripted response for step=" + step +
                         " crop=" + request.crop_sha256);
    }
    return BackendResponse{it->second, 0.0, id_};
  }

  std::string id() const override { return id_; }

 private:
  std::string id_;
  std::map<std::pair<std::string, std::string>, std::string> responses_;
};

std::map<std::pair<std::string, std::string>, std::string> load_jsonl(
    const fs::path& path, const char* step_key, const char* hash_key,
    const char* text_key) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open " + path.string());
  std::map<std::pair<std::string, std::string>, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw BackendError("bad JSONL in " + path.string() + ": " + e.what());
    }
    out[{j.at(step_key).get<std::string>(),
         j.at(hash_key).get<std::string>()}] =
        j.at(text_key).get<std::string>();
  }
  return out;
}

}  // namespace

std::unique_ptr<Backend> make_http_backend(const HttpBackendConfig& config) {
  return std::make_unique<HttpBackend>(config);
}

std::unique_ptr<Backend> make_mock_backend(const fs::path& manifest) {
  return std::make_unique<ScriptedBackend>(
      "mock:" + manifest.filename().string(),
      load_jsonl(manifest, "step", "crop_sha256", "response_text"));
}

std::unique_ptr<Backend> make_replay_backend(const fs::path& audit_log) {
  return std::make_unique<ScriptedBackend>(
      "replay:" + audit_log.filename().string(),
      load_jsonl(audit_log, "step", "crop_sha256", "response_text"));
}

AuditLog::AuditLog(const fs::path& path) : path_(path) {}

void AuditLog::record(const BackendRequest& request,
                      const BackendResponse& response) {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw BackendError("cannot append to " + path_.string());
  json j = {{"step", step_name(request.step)},
            {"crop_sha256", request.crop_sha256},
            {"prompt_sha256", sha256_hex(request.prompt)},
            {"response_text", response.text},
            {"backend_id", response.backend_id},
            {"latency_ms", response.latency_ms}};
  out << j.dump() << "\n";
}

}  // namespace ovpl
