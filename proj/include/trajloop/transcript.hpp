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

// Text renderings of an episode. The ReAct form shows reasoning as a think
// action before each external action; the ActRe form shows each action first
// and its reason after it.
//
//   ReAct                          ActRe
//   Observation: <o_t>             Observation: <o_t>
//   Action: think[<RS_t>]          Action: act[<EA_t>]
//   Observation: OK.               Reason for the action: [<RS_t>]
//   Action: <EA_t>

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajloop/trajectory.hpp"

namespace trajloop {

inline constexpr std::string_view kTaskMarker = "Here is the task.";
inline constexpr std::string_view kReasonCue = "Reason for the action:";

struct TranscriptStep {
  std::string observation;
  std::optional<std::string> reasoning;
  std::optional<std::string> action;

  bool operator==(const TranscriptStep&) const = default;
};

/// Steps in order; the last one may hold only the current observation.
struct Transcript {
  std::optional<std::string> label;
  std::vector<TranscriptStep> steps;

  bool operator==(const Transcript&) const = default;
};

Transcript transcript_of(const Trajectory& t);

std::string render_react(const Transcript& tr);
std::string render_actre(const Transcript& tr);

/// Prompt asking for the reasoning (and, ideally, the action) at the last step.
std::string react_prompt(std::string_view exemplar, const Transcript& tr);

/// Follow-up prompt asking only for the action once the reasoning is known.
std::string react_action_prompt(std::string_view exemplar, const Transcript& tr,
                                std::string_view reasoning);

/// Prompt asking for the reason behind `sampled_action` at the last step.
std::string actre_prompt(std::string_view exemplar, const Transcript& tr,
                         std::string_view sampled_action);

/// Parses a rendered ReAct body (no exemplar) back into steps. Throws
/// InvariantError on malformed input.
Transcript parse_react(std::string_view text);
Transcript parse_actre(std::string_view text);

/// What a prompt is asking the model for.
struct PromptRequest {
  enum class Kind { Reasoning, Action, Reason };
  Kind kind = Kind::Reasoning;
  Transcript transcript;          // last step holds the current observation
  std::string reasoning;          // Kind::Action
  std::string sampled_action;     // Kind::Reason
};

/// Inverse of react_prompt / react_action_prompt / actre_prompt. Returns
/// nullopt when the prompt has none of the known tails.
std::optional<PromptRequest> parse_prompt(std::string_view prompt);

/// Text up to the first occurrence of any stop string.
std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stop);

std::string trim(std::string_view s);

}  // namespace trajloop
