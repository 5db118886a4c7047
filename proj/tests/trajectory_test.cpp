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

#include <json.hpp>

#include "test_util.hpp"
#include "trajloop/errors.hpp"
#include "trajloop/store.hpp"
#include "trajloop/trajectory.hpp"

using namespace trajloop;
using trajloop::testing::random_trajectory;
using trajloop::testing::TempDir;

namespace {

Trajectory one_step(double reward) {
  Trajectory t;
  t.task_id = "t1";
  t.steps.push_back({1, "start", Reasoning{"go"}, ExternalAction{"go to den"}});
  t.steps.push_back({2, "done", std::nullopt, std::nullopt});
  t.terminal_reward = reward;
  t.success = reward == 1.0;
  return t;
}

}  // namespace

TEST(Serialize, SuccessfulTrajectoryFields) {
  const std::string line = serialize_trajectory(one_step(1.0));
  EXPECT_NE(line.find("\"terminal_reward\":1.0,\"success\":true"), std::string::npos) << line;
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto j = nlohmann::json::parse(line);
  for (const char* k : {"task_id", "round", "origin", "seed", "terminal_reward", "success", "steps"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  const auto& s = j["steps"][0];
  EXPECT_EQ(s["index"], 1);
  EXPECT_EQ(s["reasoning"]["source"], "PolicySelf");
  EXPECT_EQ(s["action"]["source"], "PolicySelf");
  EXPECT_EQ(s["action"]["valid"], true);
}

TEST(Serialize, ProvenanceMismatchIsRefused) {
  Trajectory t = one_step(0.0);
  t.steps[0].action->source = ActionSource::Sampled;
  t.origin = Origin::Composed;
  try {
    serialize_trajectory(t);
    FAIL() << "expected InvariantError";
  } catch (const InvariantError& e) {
    EXPECT_NE(std::string(e.what()).find("provenance mismatch"), std::string::npos) << e.what();
  }
}

TEST(Serialize, OtherInvariantViolations) {
  Trajectory t = one_step(1.0);
  t.success = false;
  EXPECT_THROW(serialize_trajectory(t), InvariantError);

  t = one_step(0.5);
  t.origin = Origin::Composed;
  EXPECT_THROW(serialize_trajectory(t), InvariantError);

  t = one_step(0.5);
  t.steps[1].index = 3;
  EXPECT_THROW(serialize_trajectory(t), InvariantError);

  t = one_step(0.5);
  t.steps.clear();
  EXPECT_THROW(serialize_trajectory(t), InvariantError);

  t = one_step(0.5);
  t.steps[0].reasoning->text.clear();
  EXPECT_THROW(serialize_trajectory(t), InvariantError);
}

TEST(Serialize, RoundTripThousandRandomTrajectories) {
  Rng rng(20261015);
  for (int i = 0; i < 1000; ++i) {
    const Trajectory t = random_trajectory(rng);
    ASSERT_EQ(check_invariants(t), std::nullopt) << i;
    const std::string line = serialize_trajectory(t);
    const Trajectory back = deserialize_trajectory(line);
    ASSERT_EQ(back, t) << line;
    ASSERT_EQ(serialize_trajectory(back), line);
  }
}

TEST(Serialize, DeserializeRejectsGarbage) {
  EXPECT_THROW(deserialize_trajectory("{not json"), Error);
  EXPECT_THROW(deserialize_trajectory("{\"task_id\":\"x\"}"), Error);
}

TEST(Store, BestAccumulatedReward) {
  TrajectoryStore store;
  store.begin_round(0);
  Trajectory a = one_step(0.4);
  store.append(a);
  store.begin_round(1);
  Trajectory b = one_step(1.0);
  b.round = 1;
  store.append(b);
  EXPECT_EQ(store.best_accumulated_reward("t1", 1), 1.0);
  EXPECT_EQ(store.best_accumulated_reward("t1", 0), 0.4);
  EXPECT_EQ(store.best_accumulated_reward("nope", 1), std::nullopt);
}

TEST(Store, RejectsFutureRoundsAndBadRoundOrder) {
  TrajectoryStore store;
  store.begin_round(0);
  Trajectory t = one_step(1.0);
  t.round = 1;
  EXPECT_THROW(store.append(t), Error);
  EXPECT_THROW(store.begin_round(2), Error);
}

TEST(Store, BestRewardIsMonotoneInRound) {
  Rng rng(99);
  TrajectoryStore store;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 0; r < 6; ++r) {
    store.begin_round(r);
    for (int i = 0; i < 40; ++i) {
      Trajectory t = one_step(0.0);
      t.task_id = "task-" + std::to_string(rng() % 8);
      t.round = r;
      t.terminal_reward = (rng() % 5 == 0) ? 1.0 : unit(rng) * 0.99;
      t.success = t.terminal_reward == 1.0;
      store.append(t);
    }
  }
  for (int task = 0; task < 8; ++task) {
    const std::string id = "task-" + std::to_string(task);
    double prev = -1.0;
    for (int r = 0; r < 6; ++r) {
      const auto v = store.best_accumulated_reward(id, r);
      const double cur = v.value_or(-1.0);
      EXPECT_GE(cur, prev) << id << " round " << r;
      prev = cur;
    }
  }
}

TEST(Store, SaveAndLoadRounds) {
  TempDir dir("store");
  Rng rng(5);
  TrajectoryStore store;
  for (int r = 0; r < 3; ++r) {
    store.begin_round(r);
    for (int i = 0; i < 10; ++i) {
      Trajectory t = random_trajectory(rng);
      t.round = r;
      store.append(t);
    }
    store.set_manifest({r, {"a", "b"}, 10, "cafe", 42});
    std::filesystem::create_directories(dir / ("r" + std::to_string(r)));
    store.save_round(dir / ("r" + std::to_string(r)), r);
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "r1" / "round_1.traj.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(dir / "r1" / "round_1.manifest.json"));
  const auto loaded = TrajectoryStore::load({dir / "r0", dir / "r1", dir / "r2"});
  EXPECT_EQ(loaded.entries(), store.entries());
  EXPECT_EQ(loaded.manifests(), store.manifests());
  EXPECT_EQ(loaded.current_round(), 2);

  const auto m = nlohmann::json::parse(manifest_to_json(store.manifests()[1]));
  for (const char* k : {"round", "tasks_attempted", "trajectories_added", "config_hash", "seed"}) {
    EXPECT_TRUE(m.contains(k)) << k;
  }
}

TEST(Store, GroupingIsTotal) {
  Rng rng(11);
  TrajectoryStore store;
  store.begin_round(0);
  for (int i = 0; i < 200; ++i) {
    Trajectory t = random_trajectory(rng);
    t.round = 0;
    store.append(t);
  }
  std::size_t total = 0;
  for (const auto& [task, ts] : store.group_by_task(0)) {
    for (const auto& t : ts) EXPECT_EQ(t.task_id, task);
    total += ts.size();
  }
  EXPECT_EQ(total, store.size());
}
