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

// Environment contract shared by the bundled text worlds.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trajloop/trajectory.hpp"

namespace trajloop {

struct EnvObservation {
  std::string text;
  bool terminal = false;
  std::optional<double> reward;  // present iff terminal
};

struct ActionOutcome {
  EnvObservation observation;
  bool action_valid = false;
};

inline constexpr std::string_view kInvalidActionText = "Invalid action.";
inline constexpr std::string_view kThinkObservation = "OK.";
inline constexpr int kDefaultMaxSteps = 30;

/// True for any "think[...]" action; those never change state.
bool is_think_action(std::string_view action) noexcept;

/// Single-threaded episode state machine. Run one instance per rollout.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view env_id() const noexcept = 0;

  /// Starts an episode for `task`. Throws ConfigError for tasks the
  /// fixture does not know.
  virtual EnvObservation reset(const TaskSpec& task, std::uint64_t seed) = 0;

  /// Throws UsageError when called on a finished (or never started) episode.
  virtual ActionOutcome step(std::string_view action) = 0;

  /// Currently valid actions; empty once terminal.
  virtual std::vector<std::string> action_space() const = 0;

  virtual bool terminal() const noexcept = 0;
};

/// A world fixture: the task list plus the data the environment needs.
/// Serialized as a JSON document {env_id, max_steps, tasks, world}.
struct EnvFixture {
  std::string env_id;
  int max_steps = kDefaultMaxSteps;
  std::vector<TaskSpec> tasks;
  nlohmann::json world;

  std::vector<TaskSpec> tasks_in(Split split) const;
  const TaskSpec& task(std::string_view task_id) const;
};

nlohmann::json fixture_to_json(const EnvFixture& f);
EnvFixture fixture_from_json(const nlohmann::json& j);
EnvFixture load_fixture(const std::string& path);

std::vector<std::string> registered_env_ids();

/// Builds a fresh environment over . Unknown env ids raise ConfigError.
std::unique_ptr<Environment> make_environment(std::shared_ptr<const EnvFixture> fixture);

/// Convenience: new environment for `env_id`, reset on `task`.
struct EnvSession {
  std::unique_ptr<Environment> env;
  EnvObservation first;
};
EnvSession env_reset(std::shared_ptr<const EnvFixture> fixture, std::string_view env_id,
                     const TaskSpec& task, std::uint64_t seed);

}  // namespace trajloop
