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

// Language backend contract plus the two in-process test backends.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace trajloop {

inline constexpr int kDefaultMaxTokens = 256;
inline const std::vector<std::string> kDefaultStop = {"\nObservation:"};

struct CompletionRequest {
  std::string prompt;
  int max_tokens = kDefaultMaxTokens;
  double temperature = 0.0;
  std::vector<std::string> stop = kDefaultStop;
  std::uint64_t seed = 0;

  /// Throws DomainError when max_tokens < 1 or temperature < 0.
  void check() const;
};

/// Implementations must tolerate concurrent complete() calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Generated text, already cut at the first stop string.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Digest used to key scripted responses: CRLF folded to LF, trailing
/// whitespace stripped from every line and from the end.
std::string normalize_prompt(std::string_view prompt);
std::string prompt_digest(std::string_view prompt);

/// Table-driven backend. Unknown prompts raise UnscriptedPrompt.
class ScriptedBackend final : public Backend {
 public:
  ScriptedBackend() = default;
  std::string name() const override { return "scripted"; }
  void add(std::string_view prompt, std::string response);
  void add_digest(std::string digest, std::string response);
  bool has(std::string_view prompt) const;
  std::size_t size() const noexcept { return table_.size(); }
  std::string complete(const CompletionRequest& request) override;

  /// {"entries": [{"prompt": ..., "response": ...} | {"digest": ..., "response": ...}]}
  static ScriptedBackend from_json_file(const std::string& path);

 private:
  std::map<std::string, std::string> table_;
};

/// Adapts a function; used to script behaviour that depends on the prompt.
class CallbackBackend final : public Backend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  explicit CallbackBackend(Fn fn, std::string name = "callback")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::string complete(const CompletionRequest& request) override;

 private:
  Fn fn_;
  std::string name_;
};

}  // namespace trajloop
