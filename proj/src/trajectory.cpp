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

#include "trajloop/trajectory.hpp"

#include <json.hpp>

#include "trajloop/errors.hpp"

namespace trajloop {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "test") return Split::Test;
  throw ConfigError("unknown split '" + std::string(s) + "'");
}

std::string_view to_string(ReasoningSource s) noexcept {
  return s == ReasoningSource::PolicySelf ? "PolicySelf" : "ActReSynthesized";
}

std::string_view to_string(ActionSource s) noexcept {
  return s == ActionSource::PolicySelf ? "PolicySelf" : "Sampled";
}

std::string_view to_string(Origin o) noexcept {
  switch (o) {
    case Origin::Bootstrap: return "Bootstrap";
    case Origin::PolicyOnly: return "PolicyOnly";
    case Origin::Composed: return "Composed";
  }
  return "PolicyOnly";
}

namespace {

ReasoningSource parse_reasoning_source(const std::string& s) {
  if (s == "PolicySelf") return ReasoningSource::PolicySelf;
  if (s == "ActReSynthesized") return ReasoningSource::ActReSynthesized;
  throw InvariantError("unknown reasoning source '" + s + "'");
}

ActionSource parse_action_source(const std::string& s) {
  if (s == "PolicySelf") return ActionSource::PolicySelf;
  if (s == "Sampled") return ActionSource::Sampled;
  throw InvariantError("unknown action source '" + s + "'");
}

Origin parse_origin(const std::string& s) {
  if (s == "Bootstrap") return Origin::Bootstrap;
  if (s == "PolicyOnly") return Origin::PolicyOnly;
  if (s == "Composed") return Origin::Composed;
  throw InvariantError("unknown origin '" + s + "'");
}

}  // namespace

std::size_t Trajectory::sampled_actions() const noexcept {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.sampled() ? 1 : 0;
  return n;
}

std::optional<std::string> check_invariants(const Trajectory& t) {
  if (t.task_id.empty()) return "empty task_id";
  if (t.steps.empty()) return "steps must be non-empty";
  if (!(t.terminal_reward >= 0.0 && t.terminal_reward <= 1.0)) {
    return "terminal_reward outside [0,1]";
  }
  if (t.success != (t.terminal_reward == 1.0)) return "success flag must equal (terminal_reward == 1)";
  if (t.round < 0) return "negative round";
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const Step& s = t.steps[i];
    if (s.index != static_cast<int>(i) + 1) return "step indices must be 1..T contiguous";
    if (s.reasoning.has_value() != s.action.has_value()) {
      return "reasoning and action must be both present or both absent";
    }
    if (s.is_terminal_observation() && i + 1 != t.steps.size()) {
      return "only the last step may omit reasoning and action";
    }
    if (s.reasoning && s.reasoning->text.empty()) return "reasoning text must be non-empty";
    if (s.action && s.action->source == ActionSource::Sampled &&
        s.reasoning->source != ReasoningSource::ActReSynthesized) {
      return "provenance mismatch: sampled action without ActRe-synthesized reasoning";
    }
  }
  const std::size_t sampled = t.sampled_actions();
  if (t.origin == Origin::Composed && sampled == 0) {
    return "Composed trajectory must contain a sampled action";
  }
  if (t.origin != Origin::Composed && sampled != 0) {
    return "only Composed trajectories may contain sampled actions";
  }
  return std::nullopt;
}

void validate(const Trajectory& t) {
  if (auto why = check_invariants(t)) throw InvariantError(*why);
}

std::string serialize_trajectory(const Trajectory& t) {
  validate(t);
  ojson j;
  j["task_id"] = t.task_id;
  j["round"] = t.round;
  j["origin"] = to_string(t.origin);
  j["seed"] = t.seed;
  j["terminal_reward"] = t.terminal_reward;
  j["success"] = t.success;
  ojson steps = ojson::array();
  for (const auto& s : t.steps) {
    ojson js;
    js["index"] = s.index;
    js["observation"] = s.observation;
    if (s.reasoning) {
      js["reasoning"] = {{"text", s.reasoning->text}, {"source", to_string(s.reasoning->source)}};
    } else {
      js["reasoning"] = nullptr;
    }
    if (s.action) {
      js["action"] = {{"text", s.action->text},
                      {"source", to_string(s.action->source)},
                      {"valid", s.action->valid}};
    } else {
      js["action"] = nullptr;
    }
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j.dump();
}

Trajectory deserialize_trajectory(std::string_view line) {
  Trajectory t;
  try {
    const auto j = ojson::parse(line);
    t.task_id = j.at("task_id").get<std::string>();
    t.round = j.at("round").get<int>();
    t.origin = parse_origin(j.at("origin").get<std::string>());
    t.seed = j.at("seed").get<std::uint64_t>();
    t.terminal_reward = j.at("terminal_reward").get<double>();
    t.success = j.at("success").get<bool>();
    for (const auto& js : j.at("steps")) {
      Step s;
      s.index = js.at("index").get<int>();
      s.observation = js.at("observation").get<std::string>();
      if (const auto& r = js.at("reasoning"); !r.is_null()) {
        s.reasoning = Reasoning{r.at("text").get<std::string>(),
                                parse_reasoning_source(r.at("source").get<std::string>())};
      }
      if (const auto& a = js.at("action"); !a.is_null()) {
        s.action = ExternalAction{a.at("text").get<std::string>(),
                                  parse_action_source(a.at("source").get<std::string>()),
                                  a.at("valid").get<bool>()};
      }
      t.steps.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvariantError(std::string("malformed trajectory record: ") + e.what());
  }
  validate(t);
  return t;
}

}  // namespace trajloop
