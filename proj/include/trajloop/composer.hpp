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

// Rollouts that mix the policy's own steps with randomly sampled actions
// explained after the fact, plus the per-task budgets and the training filter.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "trajloop/agents.hpp"
#include "trajloop/environment.hpp"
#include "trajloop/errors.hpp"
#include "trajloop/trajectory.hpp"

namespace trajloop {

struct Budget {
  enum class Mode { FixedCount, ForceThenStop };
  Mode mode = Mode::FixedCount;
  int count = 40;  // FixedCount
  int force = 3;   // ForceThenStop
  int cap = 20;

  static Budget fixed_count(int n) { return {Mode::FixedCount, n, 0, 0}; }
  static Budget force_then_stop(int force, int cap) { return {Mode::ForceThenStop, 0, force, cap}; }
};

struct ExplorationConfig {
  double sample_probability = 0.5;
  int invalid_streak_threshold = 3;
  Budget budget;
  int max_steps = 60;        // agent turns per rollout, invalid ones included
  double temperature = 1.0;  // policy decoding during exploration

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct Agents {
  Backend& policy;
  Backend& actre;
  const PromptLibrary& prompts;
};

inline constexpr std::string_view kTruncatedText = "Episode truncated.";

/// A backend failed mid-episode; `partial` is what had been recorded.
class RolloutAborted : public BackendError {
 public:
  RolloutAborted(const std::string& what, Trajectory partial)
      : BackendError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// One exploration episode. Sampled steps get an ActRe rationale spliced in
/// before the action.
Trajectory rollout_once(Environment& env, Agents agents, const TaskSpec& task,
                        const ExplorationConfig& cfg, std::uint64_t seed, int round);

/// Policy-only episode (no sampling), used for evaluation and bootstrap.
Trajectory policy_rollout(Environment& env, Backend& policy, const PromptLibrary& prompts,
                          const TaskSpec& task, double temperature, int max_steps,
                          std::uint64_t seed, int round, Origin origin = Origin::PolicyOnly);

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

/// Repeated rollouts for one task under cfg.budget. Rollout i uses seed
/// derive_seed(seed, task_id, i).
std::vector<Trajectory> collect_for_task(const EnvFactory& make_env, Agents agents,
                                         const TaskSpec& task, const ExplorationConfig& cfg,
                                         std::uint64_t seed, int round);

using TaskGroups = std::map<std::string, std::vector<Trajectory>>;

/// Drops failed Composed rollouts, keeps every success and keeps policy-only
/// failures only for tasks that also have a success. A trajectory counts as a
/// success when its reward reaches `success_threshold`.
TaskGroups filter_for_training(const TaskGroups& groups, double success_threshold = 1.0);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
/// exception is rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace trajloop
