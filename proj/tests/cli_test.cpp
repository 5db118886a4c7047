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

#include <array>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "test_util.hpp"
#include "trajloop/io.hpp"

using trajloop::testing::source_dir;
using trajloop::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(TRAJLOOP_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path write_config(const TempDir& d) {
  const auto path = d / "run.toml";
  std::ofstream(path) << "[env]\nid = \"minishop\"\nseed = 5\ntrain_tasks = 8\nvalid_tasks = 2\ntest_tasks = 4\n"
                         "max_steps = 15\n"
                         "[exploration]\nbudget = \"force_then_stop\"\nforce = 2\ncap = 6\nmax_steps = 20\n"
                         "[backends.prompting]\nkind = \"toy\"\nprior_strength = 2.0\n"
                         "[trainer]\nepochs = 10\noptimizer = \"adam\"\nadam_epsilon = 0.01\n"
                         "[run]\neval_max_steps = 20\nprompts_dir = \""
                      << (source_dir() / "prompts").string() << "\"\n";
  return path;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  TempDir d("cli_usage");
  const auto cfg = write_config(d);
  EXPECT_EQ(cli("--config " + cfg.string() + " --no-such-flag loop").code, 1);
  EXPECT_EQ(cli("--config " + (d / "missing.toml").string() + " loop").code, 1);
  EXPECT_EQ(cli("loop").code, 1);
  EXPECT_EQ(cli("--config " + cfg.string() + " --out " + (d / "o").string() + " collect --round 1").code, 1);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, LoopThenEvaluateIsRepeatable) {
  TempDir d("cli_loop");
  const auto cfg = write_config(d);
  const std::string base = "--config " + cfg.string() + " --out " + (d / "out").string();
  const auto loop = cli(base + " loop --rounds 2");
  ASSERT_EQ(loop.code, 0) << loop.out;
  EXPECT_NE(loop.out.find("## Training datasets"), std::string::npos);
  for (const char* f : {"report.md", "report.json", "round_0/report.json", "round_1/report.json",
                        "round_1/round_1.traj.jsonl", "round_1/params.json"}) {
    EXPECT_TRUE(fs::exists(d / "out" / f)) << f;
  }
  const auto a = cli(base + " evaluate --split test --shots 2");
  const auto b = cli(base + " evaluate --split test --shots 2");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j.at("metrics").at("tasks").get<int>(), 4);
  EXPECT_EQ(j.at("round").get<int>(), 1);
  EXPECT_TRUE(fs::exists(d / "out" / "eval" / "test_round_1_shots_2.json"));

  // A completed loop is a no-op, and report rewrites the same file.
  const auto before = trajloop::read_file((d / "out" / "report.md").string());
  ASSERT_EQ(cli(base + " loop --rounds 2").code, 0);
  ASSERT_EQ(cli(base + " report").code, 0);
  EXPECT_EQ(trajloop::read_file((d / "out" / "report.md").string()), before);

  // Re-running a finished stage is refused.
  EXPECT_EQ(cli(base + " train --round 0").code, 1);
}
