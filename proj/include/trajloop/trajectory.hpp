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

// Core data model: tasks, ReAct steps, trajectories and their JSONL form.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trajloop {

enum class Split { Train, Valid, Test };

std::string_view to_string(Split s) noexcept;
Split parse_split(std::string_view s);

struct TaskSpec {
  std::string task_id;
  std::string env_id;
  std::string goal_text;
  std::string task_type;
  Split split = Split::Train;

  bool operator==(const TaskSpec&) const = default;
};

enum class ReasoningSource { PolicySelf, ActReSynthesized };
enum class ActionSource { PolicySelf, Sampled };

std::string_view to_string(ReasoningSource s) noexcept;
std::string_view to_string(ActionSource s) noexcept;

struct Reasoning {
  std::string text;
  ReasoningSource source = ReasoningSource::PolicySelf;

  bool operator==(const Reasoning&) const = default;
};

struct ExternalAction {
  std::string text;
  ActionSource source = ActionSource::PolicySelf;
  bool valid = true;

  bool operator==(const ExternalAction&) const = default;
};

/// One (o_t, RS_t, EA_t) triple. The final step of a trajectory carries only
/// the terminal observation.
struct Step {
  int index = 1;
  std::string observation;
  std::optional<Reasoning> reasoning;
  std::optional<ExternalAction> action;

  bool is_terminal_observation() const noexcept { return !reasoning && !action; }
  bool sampled() const noexcept { return action && action->source == ActionSource::Sampled; }

  bool operator==(const Step&) const = default;
};

enum class Origin { Bootstrap, PolicyOnly, Composed };

std::string_view to_string(Origin o) noexcept;

struct Trajectory {
  std::string task_id;
  std::vector<Step> steps;
  double terminal_reward = 0.0;
  bool success = false;
  Origin origin = Origin::PolicyOnly;
  int round = 0;
  std::uint64_t seed = 0;

  std::size_t sampled_actions() const noexcept;

  bool operator==(const Trajectory&) const = default;
};

/// Returns the first violated invariant, or nullopt when `t` is well formed.
std::optional<std::string> check_invariants(const Trajectory& t);

/// Throws InvariantError naming the violated invariant.
void validate(const Trajectory& t);

/// One JSONL line (no trailing newline). Refuses invalid trajectories.
std::string serialize_trajectory(const Trajectory& t);

/// Inverse of serialize_trajectory; validates the result.
Trajectory deserialize_trajectory(std::string_view line);

}  // namespace trajloop
