// Copyright 2026 The trajloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trajloop/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "trajloop/errors.hpp"
#include "trajloop/transcript.hpp"

namespace trajloop {

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("http backend: base_url needs a scheme: '" + config_.base_url + "'");
  }
  const auto path_at = config_.base_url.find('/', scheme_end + 3);
  origin_ = config_.base_url.substr(0, path_at);
  path_ = path_at == std::string::npos ? "" : config_.base_url.substr(path_at);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  if (config_.max_tries < 1) throw ConfigError("http backend: max_tries must be >= 1");
  if (!(config_.timeout_seconds > 0)) throw ConfigError("http backend: timeout must be > 0");
}

std::string HttpBackend::complete(const CompletionRequest& request) {
  request.check();
  using clock = std::chrono::steady_clock;
  const auto deadline =
      clock::now() + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(
                         config_.timeout_seconds * config_.max_tries));

  nlohmann::json body = {{"model", config_.model},
                         {"prompt", request.prompt},
                         {"max_tokens", request.max_tokens},
                         {"temperature", request.temperature},
                         {"stop", request.stop}};
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  httplib::Client client(origin_);
  const auto whole = std::chrono::duration<double>(config_.timeout_seconds);
  const auto secs = static_cast<time_t>(whole.count());
  const auto usecs = static_cast<time_t>((whole.count() - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_tries; ++attempt) {
    auto res = client.Post(path_ + "/completions", headers, body.dump(), "application/json");
    bool retryable = true;
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 200) {
      try {
        const auto j = nlohmann::json::parse(res->body);
        return truncate_at_stop(j.at("choices").at(0).at("text").get<std::string>(), request.stop);
      } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("http backend: malformed response: ") + e.what(), false,
                           attempt);
      }
    } else {
      last_error = "HTTP " + std::to_string(res->status);
      retryable = res->status == 429 || res->status >= 500;
    }
    if (!retryable) throw BackendError("http backend: " + last_error, false, attempt);
    if (attempt == config_.max_tries) break;
    const auto wait = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(config_.backoff_base_seconds * std::ldexp(1.0, attempt - 1)));
    const auto now = clock::now();
    if (now + wait >= deadline) {
      throw BackendError("http backend: " + last_error + " (retry budget exhausted)", true, attempt);
    }
    std::this_thread::sleep_for(wait);
  }
  throw BackendError("http backend: " + last_error + " after " +
                         std::to_string(config_.max_tries) + " attempts",
                     true, config_.max_tries);
}

}  // namespace trajloop
