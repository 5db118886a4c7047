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

#include <algorithm>

#include "test_util.hpp"
#include "trajloop/environment.hpp"
#include "trajloop/errors.hpp"
#include "trajloop/minishop.hpp"
#include "trajloop/treasuregrid.hpp"

using namespace trajloop;
using trajloop::testing::simple_layout;

namespace {

std::shared_ptr<const EnvFixture> shop_fixture(int max_steps = 30) {
  using minishop::Product;
  std::vector<Product> products = {
      {"P1", "red wool scarf", "scarf", {"wool", "red"}, {{"color", {"red", "blue"}}}, 20.0},
      {"P2", "wool scarf", "scarf", {"wool"}, {{"color", {"red"}}}, 15.0},
      {"P3", "red scarf", "scarf", {"red"}, {}, 50.0},
      {"P4", "felt hat", "hat", {"felt"}, {}, 10.0},
  };
  minishop::ShopTask task{"shop-0", {"scarf", {"wool", "red"}, {{"color", "red"}}, 30.0}};
  return std::make_shared<const EnvFixture>(
      minishop::make_fixture(products, {task}, {Split::Train}, 3, max_steps));
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST(MiniShop, ResetShowsInstructionAndSearch) {
  auto f = shop_fixture();
  auto s = env_reset(f, "minishop", f->tasks[0], 1);
  EXPECT_EQ(s.first.text,
            "MiniShop\nInstruction:\ni am looking for a wool and red scarf with color red, and price "
            "lower than 30.00 dollars\n[Search]");
  EXPECT_FALSE(s.first.terminal);
  EXPECT_FALSE(s.first.reward.has_value());
}

TEST(MiniShop, GradedRewardMatchesFormula) {
  auto f = shop_fixture();
  // Brute force over the stated formula: matched terms / (attributes + options + 1).
  const auto oracle = [](int attrs_hit, int attrs, int opts_hit, int opts, bool price_ok) {
    return static_cast<double>(attrs_hit + opts_hit + (price_ok ? 1 : 0)) /
           static_cast<double>(attrs + opts + 1);
  };

  auto s = env_reset(f, "minishop", f->tasks[0], 1);
  EXPECT_TRUE(s.env->step("search[wool red scarf]").action_valid);
  auto r = s.env->step("click[P2]");
  ASSERT_TRUE(r.action_valid);
  EXPECT_TRUE(contains(s.env->action_space(), "click[red]"));
  EXPECT_TRUE(s.env->step("click[red]").action_valid);
  r = s.env->step("click[Buy Now]");
  ASSERT_TRUE(r.observation.terminal);
  EXPECT_DOUBLE_EQ(*r.observation.reward, oracle(1, 2, 1, 1, true));
  EXPECT_DOUBLE_EQ(*r.observation.reward, 0.75);

  s = env_reset(f, "minishop", f->tasks[0], 1);
  s.env->step("search[wool red scarf]");
  s.env->step("click[P1]");
  s.env->step("click[red]");
  r = s.env->step("click[Buy Now]");
  EXPECT_EQ(*r.observation.reward, 1.0);

  s = env_reset(f, "minishop", f->tasks[0], 1);
  s.env->step("search[wool red scarf]");
  s.env->step("click[P1]");
  s.env->step("click[blue]");
  r = s.env->step("click[Buy Now]");
  EXPECT_DOUBLE_EQ(*r.observation.reward, oracle(2, 2, 0, 1, true));
  EXPECT_LT(*r.observation.reward, 1.0);

  s = env_reset(f, "minishop", f->tasks[0], 1);
  s.env->step("search[wool red scarf]");
  s.env->step("click[P3]");
  r = s.env->step("click[Buy Now]");
  EXPECT_DOUBLE_EQ(*r.observation.reward, oracle(1, 2, 0, 1, false));
}

TEST(MiniShop, ResultsPageActionSpace) {
  auto f = shop_fixture();
  auto s = env_reset(f, "minishop", f->tasks[0], 1);
  const auto first = s.env->action_space();
  EXPECT_TRUE(contains(first, "search[wool red scarf]"));
  EXPECT_TRUE(contains(first, "search[scarf]"));
  s.env->step("search[wool red scarf]");
  auto space = s.env->action_space();
  EXPECT_EQ(std::count_if(space.begin(), space.end(),
                          [](const std::string& a) { return a.rfind("click[P", 0) == 0; }),
            3);
  EXPECT_TRUE(contains(space, "click[Back to Search]"));
  EXPECT_FALSE(contains(space, "click[P4]"));
}

TEST(MiniShop, InvalidAndTerminal) {
  auto f = shop_fixture();
  auto s = env_reset(f, "minishop", f->tasks[0], 1);
  auto r = s.env->step("click[Buy Now]");
  EXPECT_FALSE(r.action_valid);
  EXPECT_EQ(r.observation.text, kInvalidActionText);
  EXPECT_FALSE(r.observation.terminal);
  r = s.env->step("think[hmm]");
  EXPECT_TRUE(r.action_valid);
  EXPECT_EQ(r.observation.text, "OK.");
  s.env->step("search[scarf]");
  s.env->step("click[P4]");  // not on this page
  s.env->step("click[P1]");
  r = s.env->step("click[Buy Now]");
  EXPECT_TRUE(r.observation.terminal);
  EXPECT_TRUE(s.env->action_space().empty());
  EXPECT_THROW(s.env->step("click[Buy Now]"), UsageError);
}

TEST(MiniShop, MaxStepsTruncates) {
  auto f = shop_fixture(3);
  auto s = env_reset(f, "minishop", f->tasks[0], 1);
  s.env->step("think[a]");
  s.env->step("think[b]");
  auto r = s.env->step("think[c]");
  EXPECT_TRUE(r.observation.terminal);
  EXPECT_EQ(*r.observation.reward, 0.0);
}

TEST(TreasureGrid, ResetListsRoomsAndGoal) {
  auto f = std::make_shared<const EnvFixture>(
      treasuregrid::make_fixture({simple_layout("tg-0", "key")}, {Split::Train}));
  auto s = env_reset(f, "treasuregrid", f->tasks[0], 3);
  EXPECT_EQ(s.first.text,
            "Your task is to: put the key on the shelf.\nYou are in the hallway. Rooms: den, attic. "
            "The shelf is in the den.");
  const auto space = s.env->action_space();
  EXPECT_TRUE(contains(space, "go to den"));
  EXPECT_TRUE(contains(space, "go to attic"));
}

TEST(TreasureGrid, SolvingGivesRewardOne) {
  auto f = std::make_shared<const EnvFixture>(
      treasuregrid::make_fixture({simple_layout("tg-0", "key")}, {Split::Train}));
  auto s = env_reset(f, "treasuregrid", f->tasks[0], 3);
  EXPECT_TRUE(s.env->step("go to den").action_valid);
  EXPECT_TRUE(s.env->step("take key from table").action_valid);
  auto r = s.env->step("put key on shelf");
  EXPECT_TRUE(r.observation.terminal);
  EXPECT_EQ(*r.observation.reward, 1.0);
  EXPECT_TRUE(s.env->action_space().empty());
}

TEST(TreasureGrid, ClosedReceptacleAndThink) {
  auto f = std::make_shared<const EnvFixture>(
      treasuregrid::make_fixture({simple_layout("tg-0", "key")}, {Split::Train}));
  auto s = env_reset(f, "treasuregrid", f->tasks[0], 3);
  s.env->step("go to attic");
  EXPECT_FALSE(s.env->step("take lamp from box").action_valid);
  EXPECT_EQ(s.env->step("examine box").observation.text, "The box is closed.");
  EXPECT_TRUE(s.env->step("open box").action_valid);
  EXPECT_TRUE(s.env->step("take lamp from box").action_valid);
  auto r = s.env->step("think[where now]");
  EXPECT_TRUE(r.action_valid);
  EXPECT_EQ(r.observation.text, "OK.");
}

TEST(Environments, UnknownEnvIsConfigError) {
  auto f = std::make_shared<const EnvFixture>(
      treasuregrid::make_fixture({simple_layout("tg-0", "key")}, {Split::Train}));
  EXPECT_THROW(env_reset(f, "alfred", f->tasks[0], 1), ConfigError);
}

// Random walks: everything offered is valid, anything else is not, and the
// observation sequence is a pure function of (task, seed, actions).
TEST(Environments, ActionSpaceIsExactlyTheValidSet) {
  treasuregrid::GeneratorParams tg;
  tg.seed = 3;
  tg.train_tasks = 10;
  minishop::GeneratorParams ms;
  ms.seed = 3;
  ms.train_tasks = 10;
  for (const auto& fixture : {treasuregrid::generate(tg), minishop::generate(ms)}) {
    auto f = std::make_shared<const EnvFixture>(fixture);
    Rng rng(17);
    for (const auto& task : f->tasks_in(Split::Train)) {
      auto a = env_reset(f, f->env_id, task, 5);
      auto b = env_reset(f, f->env_id, task, 5);
      ASSERT_EQ(a.first.text, b.first.text);
      for (int step = 0; step < 40 && !a.env->terminal(); ++step) {
        const auto space = a.env->action_space();
        ASSERT_FALSE(space.empty());
        if (rng() % 4 == 0) {
          const std::string bogus = "dance with " + task.task_id;
          ASSERT_FALSE(contains(space, bogus));
          auto r = a.env->step(bogus);
          ASSERT_FALSE(r.action_valid);
          ASSERT_FALSE(r.observation.terminal);
          b.env->step(bogus);
          continue;
        }
        const auto& act = space[rng() % space.size()];
        auto ra = a.env->step(act);
        auto rb = b.env->step(act);
        ASSERT_TRUE(ra.action_valid) << act;
        ASSERT_EQ(ra.observation.text, rb.observation.text);
        ASSERT_EQ(ra.observation.terminal, ra.observation.reward.has_value());
      }
    }
  }
}

TEST(Environments, FixtureJsonRoundTrip) {
  minishop::GeneratorParams ms;
  ms.seed = 9;
  const EnvFixture f = minishop::generate(ms);
  const EnvFixture back = fixture_from_json(fixture_to_json(f));
  EXPECT_EQ(back.tasks, f.tasks);
  EXPECT_EQ(back.world, f.world);
  EXPECT_EQ(f.tasks_in(Split::Train).size(), 50u);
  EXPECT_EQ(f.tasks_in(Split::Test).size(), 20u);
}

TEST(MiniShop, GeneratorRequirementCounts) {
  minishop::GeneratorParams g;
  g.seed = 12;
  g.train_tasks = 40;
  g.required_options = 2;
  g.max_required_attributes = 3;
  const auto f = minishop::generate(g);
  std::size_t two_options = 0, three_attrs = 0;
  for (const auto& t : f.world.at("tasks")) {
    const auto n_opts = t.at("options").size();
    const auto n_attrs = t.at("attributes").size();
    EXPECT_GE(n_opts, 1u);
    EXPECT_LE(n_opts, 2u);
    EXPECT_GE(n_attrs, 1u);
    EXPECT_LE(n_attrs, 3u);
    two_options += n_opts == 2;
    three_attrs += n_attrs == 3;
    // Distinct option names.
    if (n_opts == 2) EXPECT_NE(t.at("options")[0][0], t.at("options")[1][0]);
  }
  EXPECT_GT(two_options, 0u);
  EXPECT_GT(three_attrs, 0u);

  // Defaults: one option and at most two attributes.
  const auto d = minishop::generate(minishop::GeneratorParams{});
  for (const auto& t : d.world.at("tasks")) {
    EXPECT_EQ(t.at("options").size(), 1u);
    EXPECT_LE(t.at("attributes").size(), 2u);
  }
}
