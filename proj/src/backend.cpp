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

#include "trajloop/backend.hpp"

#include <json.hpp>

#include "trajloop/errors.hpp"
#include "trajloop/hash.hpp"
#include "trajloop/io.hpp"
#include "trajloop/transcript.hpp"

namespace trajloop {

void CompletionRequest::check() const {
  if (max_tokens < 1) throw DomainError("max_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw DomainError("temperature must be >= 0");
}

std::string normalize_prompt(std::string_view prompt) {
  std::string out;
  std::string line;
  auto flush = [&] {
    const auto end = line.find_last_not_of(" \t\r");
    out += end == std::string::npos ? std::string() : line.substr(0, end + 1);
    line.clear();
  };
  for (char c : prompt) {
    if (c == '\n') {
      flush();
      out += '\n';
    } else {
      line += c;
    }
  }
  flush();
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string prompt_digest(std::string_view prompt) { return hex64(fnv1a64(normalize_prompt(prompt))); }

void ScriptedBackend::add(std::string_view prompt, std::string response) {
  table_[prompt_digest(prompt)] = std::move(response);
}

void ScriptedBackend::add_digest(std::string digest, std::string response) {
  table_[std::move(digest)] = std::move(response);
}

bool ScriptedBackend::has(std::string_view prompt) const {
  return table_.count(prompt_digest(prompt)) > 0;
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
  request.check();
  const auto digest = prompt_digest(request.prompt);
  auto it = table_.find(digest);
  if (it == table_.end()) throw UnscriptedPrompt(digest);
  return truncate_at_stop(it->second, request.stop);
}

ScriptedBackend ScriptedBackend::from_json_file(const std::string& path) {
  ScriptedBackend b;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  for (const auto& e : j.at("entries")) {
    auto response = e.at("response").get<std::string>();
    if (e.contains("prompt")) {
      b.add(e["prompt"].get<std::string>(), std::move(response));
    } else {
      b.add_digest(e.at("digest").get<std::string>(), std::move(response));
    }
  }
  return b;
}

std::string CallbackBackend::complete(const CompletionRequest& request) {
  request.check();
  return truncate_at_stop(fn_(request), request.stop);
}

}  // namespace trajloop
