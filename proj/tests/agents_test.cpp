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
#include "trajloop/agents.hpp"
#include "trajloop/errors.hpp"
#include "trajloop/io.hpp"
#include "trajloop/transcript.hpp"

using namespace trajloop;
using trajloop::testing::repo_prompts;
using trajloop::testing::source_dir;

namespace {

const char* kStart =
    "Your task is to: put the key on the shelf.\nYou are in the hallway. Rooms: den, attic. The shelf "
    "is in the den.";

Transcript two_step_history() {
  Transcript tr;
  tr.steps.push_back({kStart, "The shelf is in the den, so I will go there first.", "go to den"});
  tr.steps.push_back({"You arrive at the den. You see a table (key), a shelf (empty).",
                      "The key is on the table.", "take key from table"});
  tr.steps.push_back({"You take the key from the table.", std::nullopt, std::nullopt});
  return tr;
}

AgentContext ctx_of(Transcript tr) { return AgentContext{"put the key on the shelf", "treasuregrid", std::move(tr)}; }

}  // namespace

TEST(Prompts, ReactTwoStepMatchesGolden) {
  const auto prompts = repo_prompts();
  const std::string got = react_prompt(prompts.react("treasuregrid"), two_step_history());
  const std::string want = read_file(source_dir() / "tests" / "golden" / "react_two_step.txt");
  EXPECT_EQ(got, want);
}

TEST(Prompts, ThinkRendersWithOkObservation) {
  const auto text = render_react(two_step_history());
  EXPECT_NE(text.find("Action: think[The key is on the table.]\nObservation: OK.\nAction: take key from table\n"),
            std::string::npos);
}

TEST(Prompts, ActReTailAndOrder) {
  const auto prompts = repo_prompts();
  const std::string p = actre_prompt(prompts.actre("treasuregrid"), two_step_history(), "go to attic");
  const std::string tail = "Action: act[go to attic]\nReason for the action:";
  ASSERT_GE(p.size(), tail.size());
  EXPECT_EQ(p.substr(p.size() - tail.size()), tail);
  // Prior reasons are visible, after their actions.
  EXPECT_NE(p.find("Action: act[go to den]\nReason for the action: [The shelf is in the den, so I will go "
                   "there first.]\n"),
            std::string::npos);
}

TEST(Prompts, RenderingIsPureAndParsesBack) {
  const auto tr = two_step_history();
  EXPECT_EQ(render_react(tr), render_react(tr));
  EXPECT_EQ(parse_react(render_react(tr)), tr);
  EXPECT_EQ(parse_actre(render_actre(tr)), tr);
}

TEST(Prompts, SameContentBothOrders) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    Transcript tr;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < n; ++k) {
      const std::string tag = std::to_string(k) + "-" + std::to_string(rng() % 100);
      tr.steps.push_back({"obs " + tag, "why " + tag, "act " + tag});
    }
    tr.steps.push_back({"last", std::nullopt, std::nullopt});
    const auto a = parse_react(render_react(tr));
    const auto b = parse_actre(render_actre(tr));
    EXPECT_EQ(a, b);
    // Only the within-step order differs.
    const auto r = render_react(tr);
    const auto q = render_actre(tr);
    for (const auto& s : tr.steps) {
      if (!s.action) continue;
      EXPECT_LT(r.find("think[" + *s.reasoning + "]"), r.find("Action: " + *s.action + "\n"));
      EXPECT_GT(q.find("[" + *s.reasoning + "]"), q.find("act[" + *s.action + "]"));
    }
  }
}

TEST(Prompts, MalformedTranscriptThrows) {
  EXPECT_THROW(parse_react("Action: go to den\n"), InvariantError);
  EXPECT_THROW(parse_actre("Observation: a\nReason for the action: [x]\n"), InvariantError);
}

TEST(ReactPropose, ScriptedSingleCompletion) {
  const auto prompts = repo_prompts();
  const auto ctx = ctx_of(two_step_history());
  ScriptedBackend b;
  b.add(react_prompt(prompts.react("treasuregrid"), ctx.history),
        "I hold the key and the shelf is here.]\nAction: put key on shelf\nObservation: ignored");
  const auto p = react_propose(b, prompts, ctx, {});
  EXPECT_EQ(p.reasoning, "I hold the key and the shelf is here.");
  EXPECT_EQ(p.action, "put key on shelf");
  EXPECT_FALSE(p.empty_reason);
}

TEST(ReactPropose, TwoCallFallback) {
  const auto prompts = repo_prompts();
  const auto ctx = ctx_of(two_step_history());
  ScriptedBackend b;
  const auto& ex = prompts.react("treasuregrid");
  b.add(react_prompt(ex, ctx.history), "Shelf is here.]");
  b.add(react_action_prompt(ex, ctx.history, "Shelf is here."), " put key on shelf\n");
  const auto p = react_propose(b, prompts, ctx, {});
  EXPECT_EQ(p.reasoning, "Shelf is here.");
  EXPECT_EQ(p.action, "put key on shelf");
}

TEST(ReactPropose, UnparseableRetriesOnceThenPassesRawText) {
  const auto prompts = repo_prompts();
  const auto ctx = ctx_of(two_step_history());
  int calls = 0;
  CallbackBackend b([&](const CompletionRequest& r) {
    ++calls;
    return r.stop == std::vector<std::string>{"\n"} ? std::string() : std::string("]\nAction: ");
  });
  const auto p = react_propose(b, prompts, ctx, {});
  EXPECT_TRUE(p.empty_reason);
  EXPECT_EQ(p.reasoning, kNoReasoning);
  EXPECT_EQ(calls, 2);
}

TEST(ActReExplain, ScriptedRationale) {
  const auto prompts = repo_prompts();
  const auto ctx = ActReContext::from(ctx_of(two_step_history()));
  ScriptedBackend b;
  b.add(actre_prompt(prompts.actre("treasuregrid"), ctx.history, "go to attic"),
        " [The attic may hold something useful.]\n");
  EXPECT_EQ(actre_explain(b, prompts, ctx, "go to attic", {}), "The attic may hold something useful.");
}

TEST(ActReExplain, EmptyTwiceIsError) {
  const auto prompts = repo_prompts();
  const auto ctx = ActReContext::from(ctx_of(two_step_history()));
  int calls = 0;
  CallbackBackend b([&](const CompletionRequest&) {
    ++calls;
    return std::string(" [ ] ");
  });
  EXPECT_THROW(actre_explain(b, prompts, ctx, "go to attic", {}), BackendError);
  EXPECT_EQ(calls, 2);
}

TEST(ActReExplain, MiniShopPromptTail) {
  const auto prompts = repo_prompts();
  Transcript tr;
  tr.steps.push_back({"MiniShop\nInstruction:\ni am looking for a citrus candle, and price lower than 20.00 "
                      "dollars\n[Search]",
                      "I will search for the candle.", "search[citrus candle]"});
  tr.steps.push_back({"[Back to Search]\nPage 1 (Total results: 1)\n[P100]\nbright citrus candle\n$12.00",
                      std::nullopt, std::nullopt});
  const std::string p = actre_prompt(prompts.actre("minishop"), tr, "click[bright citrus]");
  const std::string tail = "Action: act[click[bright citrus]]\nReason for the action:";
  EXPECT_EQ(p.substr(p.size() - tail.size()), tail);
}
