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

#include "trajloop/agents.hpp"

#include "trajloop/errors.hpp"
#include "trajloop/hash.hpp"
#include "trajloop/io.hpp"

namespace trajloop {

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  if (!std::filesystem::is_directory(dir)) throw ConfigError("no prompt directory " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const auto react = entry.path() / "react.txt";
    const auto actre = entry.path() / "actre.txt";
    if (!std::filesystem::exists(react) || !std::filesystem::exists(actre)) continue;
    lib.set(entry.path().filename().string(), read_file(react.string()), read_file(actre.string()));
  }
  return lib;
}

void PromptLibrary::set(const std::string& env_id, std::string react, std::string actre) {
  exemplars_[env_id] = {std::move(react), std::move(actre)};
}

const std::string& PromptLibrary::react(const std::string& env_id) const {
  auto it = exemplars_.find(env_id);
  if (it == exemplars_.end()) throw ConfigError("no exemplar for '" + env_id + "'");
  return it->second.first;
}

const std::string& PromptLibrary::actre(const std::string& env_id) const {
  auto it = exemplars_.find(env_id);
  if (it == exemplars_.end()) throw ConfigError("no exemplar for '" + env_id + "'");
  return it->second.second;
}

namespace {

CompletionRequest request(std::string prompt, const GenerationSettings& gen, std::uint64_t salt,
                          std::vector<std::string> stop) {
  return CompletionRequest{std::move(prompt), gen.max_tokens, gen.temperature, std::move(stop),
                           splitmix64(gen.seed + salt)};
}

std::string first_line(std::string_view s) {
  const auto t = trim(s);
  return t.substr(0, t.find('\n'));
}

// Reasoning text from the part of a completion that follows "think[".
std::string reasoning_part(std::string_view s) {
  auto r = trim(s);
  constexpr std::string_view ok = "\nObservation: OK.";
  if (r.size() >= ok.size() && r.compare(r.size() - ok.size(), ok.size(), ok) == 0) {
    r = trim(std::string_view(r).substr(0, r.size() - ok.size()));
  }
  if (!r.empty() && r.back() == ']') r.pop_back();
  return trim(r);
}

std::optional<Proposal> try_propose(Backend& backend, const std::string& exemplar,
                                    const AgentContext& ctx, const GenerationSettings& gen,
                                    std::uint64_t salt, std::string& raw) {
  raw = backend.complete(request(react_prompt(exemplar, ctx.history), gen, salt, gen.stop));
  const auto at = raw.find("\nAction:");
  if (at != std::string::npos) {
    Proposal p{reasoning_part(std::string_view(raw).substr(0, at)),
               first_line(std::string_view(raw).substr(at + 8)), false};
    if (!p.reasoning.empty() && !p.action.empty()) return p;
    return std::nullopt;
  }
  const auto reasoning = reasoning_part(raw);
  if (reasoning.empty()) return std::nullopt;
  const auto action = first_line(backend.complete(
      request(react_action_prompt(exemplar, ctx.history, reasoning), gen, salt + 1, {"\n"})));
  if (action.empty()) return std::nullopt;
  return Proposal{reasoning, action, false};
}

}  // namespace

Proposal react_propose(Backend& backend, const PromptLibrary& prompts, const AgentContext& ctx,
                       const GenerationSettings& gen) {
  const auto& exemplar = prompts.react(ctx.exemplar_id);
  std::string raw;
  if (auto p = try_propose(backend, exemplar, ctx, gen, 0, raw)) return *p;
  if (auto p = try_propose(backend, exemplar, ctx, gen, 2, raw)) return *p;
  return Proposal{std::string(kNoReasoning), first_line(raw), true};
}

std::string actre_explain(Backend& backend, const PromptLibrary& prompts, const ActReContext& ctx,
                          std::string_view sampled_action, const GenerationSettings& gen) {
  const auto prompt = actre_prompt(prompts.actre(ctx.exemplar_id), ctx.history, sampled_action);
  for (std::uint64_t salt = 0; salt < 2; ++salt) {
    auto text = trim(backend.complete(request(prompt, gen, 16 + salt, {"\n"})));
    if (!text.empty() && text.front() == '[') text.erase(0, 1);
    if (!text.empty() && text.back() == ']') text.pop_back();
    text = trim(text);
    if (!text.empty()) return text;
  }
  throw BackendError("ActRe returned an empty rationale twice");
}

}  // namespace trajloop
