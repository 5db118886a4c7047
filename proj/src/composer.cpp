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

#include "trajloop/composer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "trajloop/hash.hpp"
#include "trajloop/log.hpp"

namespace trajloop {

void ExplorationConfig::validate() const {
  if (!(sample_probability >= 0.0 && sample_probability <= 1.0)) {
    throw ConfigError("sample_probability must be in [0, 1]");
  }
  if (invalid_streak_threshold < 1) throw ConfigError("invalid_streak_threshold must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (budget.mode == Budget::Mode::FixedCount && budget.count < 1) {
    throw ConfigError("FixedCount budget must be >= 1");
  }
  if (budget.mode == Budget::Mode::ForceThenStop &&
      (budget.force < 1 || budget.cap < 1 || budget.force > budget.cap)) {
    throw ConfigError("ForceThenStop needs 1 <= force <= cap");
  }
}

namespace {

struct Episode {
  Trajectory traj;
  Transcript history;  // mirrors traj.steps plus the pending observation
  EnvObservation current;
};

void finish_episode(Episode& e, Origin origin_if_no_sample, bool truncated) {
  auto& t = e.traj;
  std::string text = e.current.text;
  if (truncated) text += "\n" + std::string(kTruncatedText);
  t.steps.push_back(Step{static_cast<int>(t.steps.size()) + 1, std::move(text), std::nullopt,
                         std::nullopt});
  t.terminal_reward = (!truncated && e.current.reward) ? *e.current.reward : 0.0;
  t.success = t.terminal_reward == 1.0;
  t.origin = t.sampled_actions() > 0 ? Origin::Composed : origin_if_no_sample;
}

Trajectory run_episode(Environment& env, Backend& policy, Backend* actre,
                       const PromptLibrary& prompts, const TaskSpec& task, double p,
                       int threshold, double temperature, int max_steps, std::uint64_t seed,
                       int round, Origin origin_if_no_sample) {
  Episode e;
  e.traj.task_id = task.task_id;
  e.traj.round = round;
  e.traj.seed = seed;
  e.current = env.reset(task, seed);
  e.history.steps.push_back({e.current.text, std::nullopt, std::nullopt});
  Rng rng(derive_seed(seed, "composer"));
  int streak = 0;
  try {
    for (int turn = 0; turn < max_steps && !env.terminal(); ++turn) {
      const AgentContext ctx{task.goal_text, task.env_id, e.history};
      GenerationSettings gen;
      gen.temperature = temperature;
      gen.seed = derive_seed(seed, "policy", static_cast<std::uint64_t>(turn));
      const Proposal prop = react_propose(policy, prompts, ctx, gen);

      const double u = rng.uniform();
      const bool sample = actre != nullptr && (streak >= threshold || u < p);
      Step step{static_cast<int>(e.traj.steps.size()) + 1, e.current.text, std::nullopt,
                std::nullopt};
      if (sample) {
        auto space = env.action_space();
        std::vector<std::string> pool;
        for (const auto& a : space) {
          if (a != prop.action) pool.push_back(a);
        }
        if (pool.empty()) pool = space;
        const std::string chosen = pool[rng.below(pool.size())];
        GenerationSettings agen = gen;
        agen.seed = derive_seed(seed, "actre", static_cast<std::uint64_t>(turn));
        const auto why = actre_explain(*actre, prompts, ActReContext::from(ctx), chosen, agen);
        step.reasoning = Reasoning{why, ReasoningSource::ActReSynthesized};
        step.action = ExternalAction{chosen, ActionSource::Sampled, true};
        streak = 0;
      } else {
        step.reasoning = Reasoning{prop.reasoning, ReasoningSource::PolicySelf};
        step.action = ExternalAction{prop.action, ActionSource::PolicySelf, true};
        if (prop.empty_reason) {
          log_event({{"event", "empty_reason"}, {"task_id", task.task_id}, {"step", step.index}});
        }
      }
      const auto outcome = env.step(step.action->text);
      step.action->valid = outcome.action_valid;
      if (!sample) streak = outcome.action_valid ? 0 : streak + 1;

      e.history.steps.back().reasoning = step.reasoning->text;
      e.history.steps.back().action = step.action->text;
      e.traj.steps.push_back(std::move(step));
      e.current = outcome.observation;
      e.history.steps.push_back({e.current.text, std::nullopt, std::nullopt});
    }
  } catch (const BackendError& err) {
    finish_episode(e, origin_if_no_sample, true);
    log_event({{"event", "rollout_aborted"},
               {"task_id", task.task_id},
               {"steps", e.traj.steps.size()},
               {"error", err.what()}});
    throw RolloutAborted(std::string("rollout aborted: ") + err.what(), std::move(e.traj));
  }
  finish_episode(e, origin_if_no_sample, !env.terminal());
  return std::move(e.traj);
}

}  // namespace

Trajectory rollout_once(Environment& env, Agents agents, const TaskSpec& task,
                        const ExplorationConfig& cfg, std::uint64_t seed, int round) {
  cfg.validate();
  return run_episode(env, agents.policy, &agents.actre, agents.prompts, task,
                     cfg.sample_probability, cfg.invalid_streak_threshold, cfg.temperature,
                     cfg.max_steps, seed, round, Origin::PolicyOnly);
}

Trajectory policy_rollout(Environment& env, Backend& policy, const PromptLibrary& prompts,
                          const TaskSpec& task, double temperature, int max_steps,
                          std::uint64_t seed, int round, Origin origin) {
  if (origin == Origin::Composed) throw UsageError("policy rollouts cannot be Composed");
  return run_episode(env, policy, nullptr, prompts, task, 0.0,
                     std::numeric_limits<int>::max(), temperature, max_steps, seed, round, origin);
}

std::vector<Trajectory> collect_for_task(const EnvFactory& make_env, Agents agents,
                                         const TaskSpec& task, const ExplorationConfig& cfg,
                                         std::uint64_t seed, int round) {
  cfg.validate();
  std::vector<Trajectory> out;
  const auto& b = cfg.budget;
  const int limit = b.mode == Budget::Mode::FixedCount ? b.count : b.cap;
  bool any_success = false;
  for (int i = 0; i < limit; ++i) {
    if (b.mode == Budget::Mode::ForceThenStop && i >= b.force && any_success) break;
    auto env = make_env();
    auto t = rollout_once(*env, agents, task, cfg,
                          derive_seed(seed, task.task_id, static_cast<std::uint64_t>(i)), round);
    log_event({{"task_id", task.task_id},
               {"rollout", i},
               {"steps", t.steps.size()},
               {"reward", t.terminal_reward}});
    any_success = any_success || t.success;
    out.push_back(std::move(t));
  }
  return out;
}

TaskGroups filter_for_training(const TaskGroups& groups, double success_threshold) {
  TaskGroups out;
  for (const auto& [task, trajs] : groups) {
    const bool paired = std::any_of(trajs.begin(), trajs.end(), [&](const Trajectory& t) {
      return t.terminal_reward >= success_threshold;
    });
    if (!paired) continue;
    std::vector<Trajectory> kept;
    for (const auto& t : trajs) {
      const bool ok = t.terminal_reward >= success_threshold;
      if (ok || t.origin != Origin::Composed) kept.push_back(t);
    }
    out.emplace(task, std::move(kept));
  }
  return out;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      while (!failed) {
        const auto i = next++;
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace trajloop
