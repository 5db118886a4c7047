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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "trajloop/composer.hpp"
#include "trajloop/errors.hpp"
#include "trajloop/treasuregrid.hpp"

using namespace trajloop;
using trajloop::testing::repo_prompts;
using trajloop::testing::simple_layout;

namespace {

// Goal object that exists nowhere, so an episode only ends at the step cap.
std::shared_ptr<const EnvFixture> endless_fixture() {
  auto l = simple_layout("tg-endless", "key");
  l.goal_object = "ghost";
  return std::make_shared<const EnvFixture>(treasuregrid::make_fixture({l}, {Split::Train}, 100000));
}

std::shared_ptr<const EnvFixture> simple_fixture() {
  return std::make_shared<const EnvFixture>(
      treasuregrid::make_fixture({simple_layout("tg-0", "key")}, {Split::Train}, 50));
}

std::size_t turn_of(const CompletionRequest& r) {
  const auto req = parse_prompt(r.prompt);
  if (!req) throw BackendError("not a prompt");
  return req->transcript.steps.size() - 1;
}

CallbackBackend fixed_policy(std::string action) {
  return CallbackBackend([action](const CompletionRequest&) { return "Because.]\nAction: " + action; });
}

CallbackBackend plain_actre() {
  return CallbackBackend([](const CompletionRequest&) { return std::string(" [It looked promising.]"); });
}

// Solves the simple layout in three moves.
CallbackBackend solver() {
  return CallbackBackend([](const CompletionRequest& r) {
    static const char* plan[] = {"go to den", "take key from table", "put key on shelf"};
    const auto t = turn_of(r);
    return std::string("Next step.]\nAction: ") + (t < 3 ? plan[t] : "think[done]");
  });
}

ExplorationConfig cfg_with(double p, Budget b = Budget::fixed_count(1), int max_steps = 20) {
  ExplorationConfig c;
  c.sample_probability = p;
  c.budget = b;
  c.max_steps = max_steps;
  return c;
}

}  // namespace

TEST(Rollout, ZeroProbabilityIsPolicyOnly) {
  auto f = endless_fixture();
  auto prompts = repo_prompts();
  auto policy = fixed_policy("think[waiting]");
  auto actre = plain_actre();
  auto env = make_environment(f);
  const auto t = rollout_once(*env, Agents{policy, actre, prompts}, f->tasks[0], cfg_with(0.0), 1, 0);
  EXPECT_EQ(t.origin, Origin::PolicyOnly);
  EXPECT_EQ(t.sampled_actions(), 0u);
  EXPECT_EQ(t.steps.size(), 21u);
  EXPECT_FALSE(t.steps.back().action.has_value());
  EXPECT_NE(t.steps.back().observation.find(kTruncatedText), std::string::npos);
  EXPECT_EQ(t.terminal_reward, 0.0);
  EXPECT_EQ(check_invariants(t), std::nullopt);
}

TEST(Rollout, FullProbabilitySamplesEveryStep) {
  auto f = endless_fixture();
  auto prompts = repo_prompts();
  auto policy = fixed_policy("go to den");
  auto actre = plain_actre();
  auto env = make_environment(f);
  const auto t = rollout_once(*env, Agents{policy, actre, prompts}, f->tasks[0], cfg_with(1.0), 2, 0);
  EXPECT_EQ(t.origin, Origin::Composed);
  for (const auto& s : t.steps) {
    if (!s.action) continue;
    EXPECT_EQ(s.action->source, ActionSource::Sampled);
    EXPECT_EQ(s.reasoning->source, ReasoningSource::ActReSynthesized);
    EXPECT_EQ(s.reasoning->text, "It looked promising.");
    EXPECT_TRUE(s.action->valid);
    EXPECT_NE(s.action->text, "go to den");
  }
}

// Binomial band: |hat p - p| <= 3 sqrt(p(1-p)/n) over >= 2000 steps.
TEST(Rollout, SampledFractionWithinThreeSigma) {
  auto f = endless_fixture();
  auto prompts = repo_prompts();
  auto policy = fixed_policy("think[waiting]");
  auto actre = plain_actre();
  std::size_t steps = 0, sampled = 0;
  for (std::uint64_t seed = 0; steps < 2000; ++seed) {
    auto env = make_environment(f);
    const auto t = rollout_once(*env, Agents{policy, actre, prompts}, f->tasks[0], cfg_with(0.5, {}, 50),
                                seed, 0);
    for (const auto& s : t.steps) {
      if (!s.action) continue;
      ++steps;
      sampled += s.sampled();
    }
  }
  const double n = static_cast<double>(steps);
  const double hat = static_cast<double>(sampled) / n;
  EXPECT_LE(std::abs(hat - 0.5), 3.0 * std::sqrt(0.25 / n)) << sampled << "/" << steps;
}

TEST(Rollout, ForcedSamplingAfterThreeInvalid) {
  auto f = endless_fixture();
  auto prompts = repo_prompts();
  auto policy = fixed_policy("fly to the moon");
  auto actre = plain_actre();
  auto env = make_environment(f);
  const auto t = rollout_once(*env, Agents{policy, actre, prompts}, f->tasks[0], cfg_with(0.0, {}, 12), 3, 0);
  ASSERT_EQ(t.steps.size(), 13u);
  for (int i = 0; i < 12; ++i) {
    const auto& s = t.steps[static_cast<std::size_t>(i)];
    const bool forced = (i + 1) % 4 == 0;  // steps 4, 8, 12
    EXPECT_EQ(s.sampled(), forced) << "step " << i + 1;
    if (!forced) EXPECT_FALSE(s.action->valid);
  }
  EXPECT_EQ(t.origin, Origin::Composed);
}

TEST(Rollout, SampledInvalidDoesNotFeedStreak) {
  // Policy alternates: two invalid, then a valid think; never reaches three.
  auto f = endless_fixture();
  auto prompts = repo_prompts();
  CallbackBackend policy([](const CompletionRequest& r) {
    return std::string("x.]\nAction: ") + (turn_of(r) % 3 == 2 ? "think[ok]" : "jump");
  });
  auto actre = plain_actre();
  auto env = make_environment(f);
  const auto t = rollout_once(*env, Agents{policy, actre, prompts}, f->tasks[0], cfg_with(0.0, {}, 30), 4, 0);
  EXPECT_EQ(t.sampled_actions(), 0u);
}

TEST(Collect, FixedCountProducesExactlyN) {
  auto f = simple_fixture();
  auto prompts = repo_prompts();
  auto policy = solver();
  auto actre = plain_actre();
  const auto out = collect_for_task([&] { return make_environment(f); }, Agents{policy, actre, prompts},
                                    f->tasks[0], cfg_with(0.0, Budget::fixed_count(40)), 9, 1);
  ASSERT_EQ(out.size(), 40u);
  for (const auto& t : out) EXPECT_TRUE(t.success);
}

TEST(Collect, ForceThenStopMinimumAndCap) {
  auto f = simple_fixture();
  auto prompts = repo_prompts();
  auto actre = plain_actre();
  const auto make = [&] { return make_environment(f); };

  // Fails the first rollout, solves every later one.
  int episodes = 0;
  auto solve = solver();
  CallbackBackend late([&](const CompletionRequest& r) {
    if (turn_of(r) == 0) ++episodes;
    if (episodes == 1) return std::string("Wait.]\nAction: think[wait]");
    return solve.complete(r);
  });
  auto out = collect_for_task(make, Agents{late, actre, prompts}, f->tasks[0],
                              cfg_with(0.0, Budget::force_then_stop(3, 20), 5), 9, 1);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_FALSE(out[0].success);
  EXPECT_TRUE(out[1].success);

  auto idle = fixed_policy("think[wait]");
  out = collect_for_task(make, Agents{idle, actre, prompts}, f->tasks[0],
                         cfg_with(0.0, Budget::force_then_stop(3, 20), 5), 9, 1);
  EXPECT_EQ(out.size(), 20u);

  // Success later than the forced minimum stops right there.
  episodes = 0;
  CallbackBackend fifth([&](const CompletionRequest& r) {
    if (turn_of(r) == 0) ++episodes;
    if (episodes < 5) return std::string("Wait.]\nAction: think[wait]");
    return solve.complete(r);
  });
  out = collect_for_task(make, Agents{fifth, actre, prompts}, f->tasks[0],
                         cfg_with(0.0, Budget::force_then_stop(3, 20), 5), 9, 1);
  EXPECT_EQ(out.size(), 5u);
}

TEST(Collect, DeterministicGivenSeeds) {
  auto f = simple_fixture();
  auto prompts = repo_prompts();
  auto policy = fixed_policy("think[hm]");
  auto actre = plain_actre();
  const auto make = [&] { return make_environment(f); };
  const auto cfg = cfg_with(0.5, Budget::fixed_count(8), 10);
  const auto a = collect_for_task(make, Agents{policy, actre, prompts}, f->tasks[0], cfg, 77, 1);
  const auto b = collect_for_task(make, Agents{policy, actre, prompts}, f->tasks[0], cfg, 77, 1);
  EXPECT_EQ(a, b);
  const auto c = collect_for_task(make, Agents{policy, actre, prompts}, f->tasks[0], cfg, 78, 1);
  EXPECT_NE(a, c);
}

TEST(Collect, BackendFailureAbortsWithPartialRecord) {
  auto f = simple_fixture();
  auto prompts = repo_prompts();
  auto policy = fixed_policy("go to den");
  CallbackBackend broken([](const CompletionRequest&) -> std::string { throw BackendError("down"); });
  auto env = make_environment(f);
  try {
    rollout_once(*env, Agents{policy, broken, prompts}, f->tasks[0], cfg_with(1.0), 1, 0);
    FAIL();
  } catch (const RolloutAborted& e) {
    EXPECT_EQ(e.partial().terminal_reward, 0.0);
  }
}

namespace {

Trajectory traj(const std::string& task, Origin origin, bool success, double reward = -1) {
  Trajectory t;
  t.task_id = task;
  t.origin = origin;
  t.terminal_reward = success ? 1.0 : (reward >= 0 ? reward : 0.0);
  t.success = success;
  Step s{1, "o", Reasoning{"r"}, ExternalAction{"a"}};
  if (origin == Origin::Composed) {
    s.reasoning->source = ReasoningSource::ActReSynthesized;
    s.action->source = ActionSource::Sampled;
  }
  t.steps = {s, Step{2, "end", std::nullopt, std::nullopt}};
  return t;
}

}  // namespace

TEST(Filter, MixedGroup) {
  TaskGroups g;
  g["a"] = {traj("a", Origin::Composed, false), traj("a", Origin::Composed, true),
            traj("a", Origin::PolicyOnly, false)};
  const auto out = filter_for_training(g);
  ASSERT_EQ(out.at("a").size(), 2u);
  EXPECT_EQ(out.at("a")[0].origin, Origin::Composed);
  EXPECT_TRUE(out.at("a")[0].success);
  EXPECT_EQ(out.at("a")[1].origin, Origin::PolicyOnly);
  EXPECT_FALSE(out.at("a")[1].success);
}

TEST(Filter, AllFailuresContributeNothing) {
  TaskGroups g;
  g["a"] = {traj("a", Origin::Composed, false), traj("a", Origin::Composed, false),
            traj("a", Origin::Composed, false)};
  EXPECT_TRUE(filter_for_training(g).empty());
}

TEST(Filter, RandomizedGroupsKeepInvariants) {
  Rng rng(10000);
  for (int i = 0; i < 10000; ++i) {
    TaskGroups g;
    const int tasks = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < tasks; ++k) {
      const std::string id = "t" + std::to_string(k);
      const int n = static_cast<int>(rng() % 6);
      for (int j = 0; j < n; ++j) {
        const Origin o = rng() % 2 ? Origin::Composed : Origin::PolicyOnly;
        g[id].push_back(traj(id, o, rng() % 3 == 0, 0.5));
      }
    }
    const auto out = filter_for_training(g);
    for (const auto& [task, ts] : out) {
      bool has_success = false;
      for (const auto& t : ts) has_success = has_success || t.success;
      for (const auto& t : ts) {
        ASSERT_EQ(t.task_id, task);
        ASSERT_FALSE(!t.success && t.origin == Origin::Composed);
        ASSERT_TRUE(t.success || has_success);
      }
      // Every success in the input survives.
      std::size_t in_success = 0, out_success = 0;
      for (const auto& t : g.at(task)) in_success += t.success;
      for (const auto& t : ts) out_success += t.success;
      ASSERT_EQ(in_success, out_success);
    }
  }
}

TEST(Exploration, ValidateRejectsBadValues) {
  ExplorationConfig c;
  c.sample_probability = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.budget = Budget::force_then_stop(5, 3);
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.invalid_streak_threshold = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}
