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

#include "trajloop/transcript.hpp"

#include <algorithm>

#include "trajloop/errors.hpp"

namespace trajloop {

namespace {

constexpr std::string_view kObsPrefix = "Observation: ";
constexpr std::string_view kActPrefix = "Action: ";
constexpr std::string_view kLabelPrefix = "Label: ";
constexpr std::string_view kOk = "OK.";

bool starts_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(0, p.size()) == p;
}

bool ends_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

struct Block {
  enum class Kind { Observation, Action, Reason } kind;
  std::string text;
};

// Splits a rendered body into marker-led blocks; continuation lines belong to
// the preceding block.
std::vector<Block> split_blocks(std::string_view text) {
  std::vector<Block> blocks;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (starts_with(line, kObsPrefix)) {
      blocks.push_back({Block::Kind::Observation, std::string(line.substr(kObsPrefix.size()))});
    } else if (starts_with(line, kActPrefix)) {
      blocks.push_back({Block::Kind::Action, std::string(line.substr(kActPrefix.size()))});
    } else if (starts_with(line, kReasonCue)) {
      blocks.push_back({Block::Kind::Reason, trim(line.substr(kReasonCue.size()))});
    } else if (!blocks.empty()) {
      blocks.back().text += '\n';
      blocks.back().text += line;
    } else if (!trim(line).empty()) {
      throw InvariantError("transcript text before the first marker");
    }
  }
  return blocks;
}

std::string unwrap(std::string_view s, std::string_view open) {
  if (!starts_with(s, open) || !ends_with(s, "]") || s.size() < open.size() + 1) {
    throw InvariantError("expected " + std::string(open) + "...]: '" + std::string(s) + "'");
  }
  return std::string(s.substr(open.size(), s.size() - open.size() - 1));
}

std::string body_prefix(std::string_view exemplar, const Transcript& tr) {
  std::string out = trim(exemplar);
  out += "\n\n";
  out += kTaskMarker;
  out += '\n';
  if (tr.label) {
    out += kLabelPrefix;
    out += *tr.label;
    out += '\n';
  }
  return out;
}

void require_pending(const Transcript& tr) {
  if (tr.steps.empty() || tr.steps.back().action || tr.steps.back().reasoning) {
    throw UsageError("prompt needs a transcript ending in an observation-only step");
  }
}

}  // namespace

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

Transcript transcript_of(const Trajectory& t) {
  Transcript tr;
  for (const auto& s : t.steps) {
    TranscriptStep ts{s.observation, std::nullopt, std::nullopt};
    if (s.reasoning) ts.reasoning = s.reasoning->text;
    if (s.action) ts.action = s.action->text;
    tr.steps.push_back(std::move(ts));
  }
  return tr;
}

std::string render_react(const Transcript& tr) {
  std::string out;
  for (const auto& s : tr.steps) {
    out += kObsPrefix;
    out += s.observation;
    out += '\n';
    if (s.reasoning) {
      out += "Action: think[" + *s.reasoning + "]\n";
      out += "Observation: OK.\n";
    }
    if (s.action) out += "Action: " + *s.action + "\n";
  }
  return out;
}

std::string render_actre(const Transcript& tr) {
  std::string out;
  for (const auto& s : tr.steps) {
    out += kObsPrefix;
    out += s.observation;
    out += '\n';
    if (s.action) out += "Action: act[" + *s.action + "]\n";
    if (s.reasoning) out += std::string(kReasonCue) + " [" + *s.reasoning + "]\n";
  }
  return out;
}

std::string react_prompt(std::string_view exemplar, const Transcript& tr) {
  require_pending(tr);
  return body_prefix(exemplar, tr) + render_react(tr) + "Action: think[";
}

std::string react_action_prompt(std::string_view exemplar, const Transcript& tr,
                                std::string_view reasoning) {
  require_pending(tr);
  return body_prefix(exemplar, tr) + render_react(tr) + "Action: think[" +
         std::string(reasoning) + "]\nObservation: OK.\nAction:";
}

std::string actre_prompt(std::string_view exemplar, const Transcript& tr,
                         std::string_view sampled_action) {
  require_pending(tr);
  return body_prefix(exemplar, tr) + render_actre(tr) + "Action: act[" +
         std::string(sampled_action) + "]\n" + std::string(kReasonCue);
}

Transcript parse_react(std::string_view text) {
  const auto blocks = split_blocks(text);
  Transcript tr;
  std::size_t i = 0;
  while (i < blocks.size()) {
    if (blocks[i].kind != Block::Kind::Observation) {
      throw InvariantError("ReAct transcript: expected an observation");
    }
    TranscriptStep s{blocks[i].text, std::nullopt, std::nullopt};
    ++i;
    if (i < blocks.size() && blocks[i].kind == Block::Kind::Action) {
      s.reasoning = unwrap(blocks[i].text, "think[");
      if (i + 2 >= blocks.size() || blocks[i + 1].kind != Block::Kind::Observation ||
          blocks[i + 1].text != kOk || blocks[i + 2].kind != Block::Kind::Action) {
        throw InvariantError("ReAct transcript: reasoning must be followed by OK. and an action");
      }
      s.action = blocks[i + 2].text;
      i += 3;
    }
    tr.steps.push_back(std::move(s));
  }
  return tr;
}

Transcript parse_actre(std::string_view text) {
  const auto blocks = split_blocks(text);
  Transcript tr;
  std::size_t i = 0;
  while (i < blocks.size()) {
    if (blocks[i].kind != Block::Kind::Observation) {
      throw InvariantError("ActRe transcript: expected an observation");
    }
    TranscriptStep s{blocks[i].text, std::nullopt, std::nullopt};
    ++i;
    if (i < blocks.size() && blocks[i].kind == Block::Kind::Action) {
      s.action = unwrap(blocks[i].text, "act[");
      if (i + 1 >= blocks.size() || blocks[i + 1].kind != Block::Kind::Reason) {
        throw InvariantError("ActRe transcript: action must be followed by its reason");
      }
      s.reasoning = unwrap(blocks[i + 1].text, "[");
      i += 2;
    }
    tr.steps.push_back(std::move(s));
  }
  return tr;
}

std::optional<PromptRequest> parse_prompt(std::string_view prompt) {
  const std::string marker = "\n" + std::string(kTaskMarker) + "\n";
  const auto at = prompt.rfind(marker);
  if (at == std::string_view::npos) return std::nullopt;
  std::string_view body = prompt.substr(at + marker.size());
  std::optional<std::string> label;
  if (starts_with(body, kLabelPrefix)) {
    const auto nl = body.find('\n');
    if (nl == std::string_view::npos) return std::nullopt;
    label = std::string(body.substr(kLabelPrefix.size(), nl - kLabelPrefix.size()));
    body = body.substr(nl + 1);
  }
  PromptRequest req;
  try {
    if (ends_with(body, "Action: think[")) {
      req.kind = PromptRequest::Kind::Reasoning;
      req.transcript = parse_react(body.substr(0, body.size() - std::string_view("Action: think[").size()));
    } else if (ends_with(body, "]\nObservation: OK.\nAction:")) {
      const auto think = body.rfind("Action: think[");
      if (think == std::string_view::npos) return std::nullopt;
      req.kind = PromptRequest::Kind::Action;
      req.transcript = parse_react(body.substr(0, think));
      const auto inner_begin = think + std::string_view("Action: think[").size();
      const auto inner_end = body.size() - std::string_view("]\nObservation: OK.\nAction:").size();
      req.reasoning = std::string(body.substr(inner_begin, inner_end - inner_begin));
    } else if (ends_with(body, kReasonCue)) {
      const auto act = body.rfind("Action: act[");
      if (act == std::string_view::npos) return std::nullopt;
      req.kind = PromptRequest::Kind::Reason;
      req.transcript = parse_actre(body.substr(0, act));
      const auto line_end = body.find('\n', act);
      if (line_end == std::string_view::npos) return std::nullopt;
      req.sampled_action = unwrap(body.substr(act + kActPrefix.size(), line_end - act - kActPrefix.size()), "act[");
    } else {
      return std::nullopt;
    }
  } catch (const InvariantError&) {
    return std::nullopt;
  }
  if (req.transcript.steps.empty() || req.transcript.steps.back().action) return std::nullopt;
  req.transcript.label = std::move(label);
  return req;
}

std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stop) {
  std::size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    const auto at = text.find(s);
    if (at != std::string_view::npos) cut = std::min(cut, at);
  }
  return std::string(text.substr(0, cut));
}

}  // namespace trajloop
