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

// The reason-then-act policy agent and the act-then-reason annotator.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "trajloop/backend.hpp"
#include "trajloop/transcript.hpp"

namespace trajloop {

/// One-shot exemplars, read from <dir>/<env_id>/react.txt and actre.txt.
class PromptLibrary {
 public:
  PromptLibrary() = default;
  static PromptLibrary load(const std::filesystem::path& dir);
  void set(const std::string& env_id, std::string react, std::string actre);
  const std::string& react(const std::string& env_id) const;
  const std::string& actre(const std::string& env_id) const;

 private:
  std::map<std::string, std::pair<std::string, std::string>> exemplars_;
};

/// History ends with the current observation (an observation-only step).
struct AgentContext {
  std::string goal;
  std::string exemplar_id;
  Transcript history;
};

/// Same content as AgentContext; rendered act-then-reason.
struct ActReContext {
  std::string goal;
  std::string exemplar_id;
  Transcript history;

  static ActReContext from(const AgentContext& ctx) { return {ctx.goal, ctx.exemplar_id, ctx.history}; }
};

struct GenerationSettings {
  double temperature = 0.0;
  int max_tokens = kDefaultMaxTokens;
  std::vector<std::string> stop = kDefaultStop;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kNoReasoning = "(no reasoning)";

struct Proposal {
  std::string reasoning;
  std::string action;
  bool empty_reason = false;  // completion could not be parsed; action is the raw text
};

Proposal react_propose(Backend& backend, const PromptLibrary& prompts, const AgentContext& ctx,
                       const GenerationSettings& gen);

/// Throws BackendError when the backend returns an empty rationale twice.
std::string actre_explain(Backend& backend, const PromptLibrary& prompts, const ActReContext& ctx,
                          std::string_view sampled_action, const GenerationSettings& gen);

}  // namespace trajloop
