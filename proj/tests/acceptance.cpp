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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero if any fails. Tolerances are fixed below.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "test_util.hpp"
#include "trajloop/composer.hpp"
#include "trajloop/errors.hpp"
#include "trajloop/io.hpp"
#include "trajloop/lexicon.hpp"
#include "trajloop/objective.hpp"
#include "trajloop/orchestrator.hpp"

using namespace trajloop;
using trajloop::testing::repo_prompts;
using trajloop::testing::simple_layout;
using trajloop::testing::source_dir;
using trajloop::testing::TempDir;
namespace fs = std::filesystem;

namespace {

constexpr double kIdentityTol = 1e-12;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradFloor = 1e-6;  // denominator floor for the relative error
constexpr double kFdStep = 1e-5;
constexpr double kMetricTol = 1e-9;
constexpr double kTrainSuccessTarget = 95.0;
constexpr int kAblationEpochsRound0 = 3;
constexpr double kAc1Seconds = 1.0, kAc2Seconds = 30.0, kLoopSeconds = 300.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      pass = false;
      detail << what;
    }
  }
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", x);
  return b;
}

// ---------------------------------------------------------------- AC1

void ac1(Outcome& o) {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::uniform_real_distribution<double> rf(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int K = 1 + static_cast<int>(rng() % 5);
    const double r = rf(rng);
    const auto w = decompose(K, r).recombined_weights();
    if (w.size() != static_cast<std::size_t>(K) + 1) {
      o.require(false, "wrong weight count");
      return;
    }
    for (int k = 0; k < K; ++k) worst = std::max(worst, std::abs(w[static_cast<std::size_t>(k)] - 1.0));
    worst = std::max(worst, std::abs(w.back() - r));
  }
  o.require(worst <= kIdentityTol, "max weight error " + fmt(worst));

  auto coeffs = [](int K, double r) {
    const auto d = decompose(K, r);
    return std::array<double, 3>{d.sft_success, d.sft_fail, d.contrast};
  };
  auto near = [](std::array<double, 3> a, std::array<double, 3> b) {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(a[i] - b[i]) > kIdentityTol) return false;
    }
    return true;
  };
  o.require(near(coeffs(1, 0.0), {0.5, 0.5, 0.5}), "(1,0) coefficients");
  for (int K = 1; K <= 5; ++K) {
    o.require(near(coeffs(K, -1.0), {1.0 - 1.0 / K, 0.0, 1.0 / K}), "(" + std::to_string(K) + ",-1) coefficients");
  }
  o.require(near(coeffs(1, -1.0), {0.0, 0.0, 1.0}), "(1,-1) coefficients");
  o.require(!decompose(1, -1.0).warnings.empty(), "(1,-1) warning");
  const double s = since(t0);
  o.require(s < kAc1Seconds, "runtime " + fmt(s) + " s");
  if (o.pass) o.detail << "max weight error " << fmt(worst) << ", " << fmt(s) << " s";
}

// ---------------------------------------------------------------- shared pool

struct Pool {
  std::shared_ptr<const EnvFixture> fixture;
  std::shared_ptr<const ToyModel> model;
  TaskGroups groups;

  Pool(std::uint64_t seed, unsigned bits) {
    treasuregrid::GeneratorParams g;
    g.seed = seed;
    g.train_tasks = 20;
    g.valid_tasks = 0;
    g.test_tasks = 1;
    g.max_steps = 15;
    fixture = std::make_shared<const EnvFixture>(treasuregrid::generate(g));
    model = std::make_shared<const ToyModel>(treasuregrid::make_lexicon(), ToyModelConfig{bits, 3.0});
    const auto prompts = repo_prompts();
    ToyBackend prior(model, std::make_shared<ToyPolicyParams>(model->prior_params(2.0)));
    for (const auto& task : fixture->tasks_in(Split::Train)) {
      std::vector<Trajectory> ts;
      bool ok = false;
      for (std::uint64_t i = 0; i < 4; ++i) {
        auto env = make_environment(fixture);
        ts.push_back(policy_rollout(*env, prior, prompts, task, 1.0, 20, derive_seed(seed, task.task_id, i), 0));
        ok = ok || ts.back().success;
      }
      if (ok) groups[task.task_id] = std::move(ts);
    }
  }
};

// ---------------------------------------------------------------- AC2

void ac2(Outcome& o) {
  const auto t0 = Clock::now();
  const Pool pool(31, 8);
  const auto all = shape_rewards(pool.groups, {}).examples;
  Rng rng(202);
  std::uniform_real_distribution<double> w(-1.0, 1.0), perturb(-0.5, 0.5);
  double worst = 0.0;
  std::size_t probes = 0;
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<WeightedExample> ex;
    for (int k = 0; k < 3; ++k) {
      ex.push_back(all[rng() % all.size()]);
      ex.back().weight = w(rng);
    }
    auto params = pool.model->initial_params();
    for (auto& x : params.weights) x += perturb(rng);
    ObjectiveOptions opts;
    opts.include_world_model = inst % 2 == 0;
    const auto J = [&](const ToyPolicyParams& p) {
      return objective_value_and_grad(*pool.model, p, ex, opts);
    };
    const auto g = J(params).grad;
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] != 0.0) support.push_back(i);
    }
    std::vector<std::size_t> coords;
    for (int c = 0; c < 20 && !support.empty(); ++c) coords.push_back(support[rng() % support.size()]);
    for (int c = 0; c < 5; ++c) coords.push_back(rng() % g.size());
    for (const auto i : coords) {
      auto up = params, down = params;
      up.weights[i] += kFdStep;
      down.weights[i] -= kFdStep;
      const double fd = (J(up).value - J(down).value) / (2 * kFdStep);
      const double rel = std::abs(g[i] - fd) / std::max({std::abs(fd), std::abs(g[i]), kGradFloor});
      worst = std::max(worst, rel);
      ++probes;
    }
  }
  const double s = since(t0);
  o.require(worst < kGradRelTol, "max relative error " + fmt(worst));
  o.require(s < kAc2Seconds, "runtime " + fmt(s) + " s");
  if (o.pass) o.detail << "max relative error " << fmt(worst) << " over " << probes << " probes, " << fmt(s) << " s";
}

// ---------------------------------------------------------------- AC3

void ac3(Outcome& o) {
  Rng rng(303);
  std::size_t composed_failures = 0, unpaired = 0;
  for (int i = 0; i < 10000; ++i) {
    TaskGroups g;
    const int tasks = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < tasks; ++k) {
      const std::string id = "t" + std::to_string(k);
      const int n = static_cast<int>(rng() % 6);
      for (int j = 0; j < n; ++j) {
        Trajectory t;
        t.task_id = id;
        t.origin = rng() % 2 ? Origin::Composed : Origin::PolicyOnly;
        t.terminal_reward = rng() % 3 == 0 ? 1.0 : static_cast<double>(rng() % 100) / 100.0;
        t.success = t.terminal_reward == 1.0;
        g[id].push_back(t);
      }
    }
    for (const auto& [task, ts] : filter_for_training(g)) {
      bool success = false;
      for (const auto& t : ts) success = success || (t.success && t.task_id == task);
      for (const auto& t : ts) {
        composed_failures += !t.success && t.origin == Origin::Composed;
        unpaired += !t.success && !success;
      }
    }
  }
  o.require(composed_failures == 0, std::to_string(composed_failures) + " composed failures kept");
  o.require(unpaired == 0, std::to_string(unpaired) + " unpaired failures kept");

  int identical = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Pool pool(seed, 10);
    ShapingPolicy sft;
    sft.mode = ShapingPolicy::Mode::SupervisedOnly;
    ShapingPolicy zero;
    zero.failure_weight_override = 0.0;
    const auto p = pool.model->initial_params();
    const auto a = objective_value_and_grad(*pool.model, p, shape_rewards(pool.groups, sft).examples, {});
    const auto b = objective_value_and_grad(*pool.model, p, shape_rewards(pool.groups, zero).examples, {});
    identical += a.value == b.value && a.grad == b.grad;
  }
  o.require(identical == 20, std::to_string(identical) + "/20 fixtures bit-identical");
  if (o.pass) o.detail << "10000 groups clean; 20/20 fixtures bit-identical";
}

// ---------------------------------------------------------------- AC4

std::size_t turn_of(const CompletionRequest& r) { return parse_prompt(r.prompt)->transcript.steps.size() - 1; }

void ac4(Outcome& o) {
  const auto prompts = repo_prompts();
  CallbackBackend actre([](const CompletionRequest&) { return std::string(" [Worth a look.]"); });

  auto endless = simple_layout("tg-endless", "key");
  endless.goal_object = "ghost";
  const auto never = std::make_shared<const EnvFixture>(treasuregrid::make_fixture({endless}, {Split::Train}, 100000));
  const auto& never_task = never->tasks[0];

  // Sampling rate.
  CallbackBackend thinker([](const CompletionRequest&) { return std::string("Hm.]\nAction: think[wait]"); });
  ExplorationConfig cfg;
  cfg.sample_probability = 0.5;
  cfg.max_steps = 50;
  std::size_t steps = 0, sampled = 0;
  for (std::uint64_t seed = 0; steps < 2000; ++seed) {
    auto env = make_environment(never);
    for (const auto& s : rollout_once(*env, Agents{thinker, actre, prompts}, never_task, cfg, seed, 1).steps) {
      if (!s.action) continue;
      ++steps;
      sampled += s.sampled();
    }
  }
  const double n = static_cast<double>(steps);
  const double dev = std::abs(static_cast<double>(sampled) / n - 0.5);
  const double band = 3.0 * std::sqrt(0.25 / n);
  o.require(dev <= band, "sampled " + std::to_string(sampled) + "/" + std::to_string(steps));

  // Forced sampling after three invalid policy actions.
  CallbackBackend invalid([](const CompletionRequest&) { return std::string("Go.]\nAction: fly away"); });
  cfg.sample_probability = 0.0;
  cfg.max_steps = 4;
  {
    auto env = make_environment(never);
    const auto t = rollout_once(*env, Agents{invalid, actre, prompts}, never_task, cfg, 9, 1);
    bool ok = t.steps.size() == 5;
    for (std::size_t i = 0; ok && i < 4; ++i) ok = t.steps[i].sampled() == (i == 3);
    o.require(ok, "forced sampling not on step 4");
  }

  // Budgets.
  const auto easy = std::make_shared<const EnvFixture>(
      treasuregrid::make_fixture({simple_layout("tg-easy", "key")}, {Split::Train}, 50));
  const auto make = [&] { return make_environment(easy); };
  int episodes = 0;
  int first_success = 0;
  CallbackBackend scripted([&](const CompletionRequest& r) {
    static const char* plan[] = {"go to den", "take key from table", "put key on shelf"};
    const auto k = turn_of(r);
    if (k == 0) ++episodes;
    if (first_success == 0 || episodes < first_success) return std::string("Wait.]\nAction: think[wait]");
    return std::string("Go.]\nAction: ") + (k < 3 ? plan[k] : "think[done]");
  });
  cfg.max_steps = 5;
  auto count = [&](Budget b, int success_at) {
    episodes = 0;
    first_success = success_at;
    cfg.budget = b;
    return collect_for_task(make, Agents{scripted, actre, prompts}, easy->tasks[0], cfg, 4, 1).size();
  };
  const auto fixed = count(Budget::fixed_count(40), 1);
  const auto early = count(Budget::force_then_stop(3, 20), 2);
  const auto late = count(Budget::force_then_stop(3, 20), 6);
  const auto none = count(Budget::force_then_stop(3, 20), 0);
  o.require(fixed == 40, "FixedCount(40) gave " + std::to_string(fixed));
  o.require(early == 3, "ForceThenStop success at 2 gave " + std::to_string(early));
  o.require(late == 6, "ForceThenStop success at 6 gave " + std::to_string(late));
  o.require(none == 20, "ForceThenStop without success gave " + std::to_string(none));
  if (o.pass) {
    o.detail << "sampled " << sampled << "/" << steps << " (|dev| " << fmt(dev) << " <= " << fmt(band)
             << "); forced on step 4; budgets 40/3/6/20";
  }
}

// ---------------------------------------------------------------- loops

RunConfig repo_config(const std::string& name, const fs::path& out) {
  auto c = load_config(source_dir() / "fixtures" / name);
  c.out = out;
  c.prompts_dir = source_dir() / "prompts";
  return c;
}

std::string series(const std::vector<RoundReport>& rs, const std::function<double(const RoundReport&)>& f) {
  std::string s;
  for (const auto& r : rs) s += (s.empty() ? "" : "->") + fmt(f(r));
  return s;
}

bool non_decreasing(const std::vector<RoundReport>& rs, const std::function<double(const RoundReport&)>& f) {
  for (std::size_t i = 1; i < rs.size(); ++i) {
    if (f(rs[i]) < f(rs[i - 1])) return false;
  }
  return true;
}

void ac5(Outcome& o) {
  TempDir d("ac5");
  const auto t0 = Clock::now();
  auto cfg = repo_config("treasuregrid.toml", d.path());
  o.require(cfg.env.train_tasks == 50 && cfg.env.test_tasks == 20, "config is not 50 train / 20 test");
  const auto rs = Orchestrator(cfg).loop(4);
  const double s = since(t0);
  const auto acc = [](const RoundReport& r) { return r.accumulated.at(Split::Train).success_rate; };
  const auto test = [](const RoundReport& r) { return r.single_shot.at(Split::Test).success_rate; };
  o.require(rs.size() == 4, "expected 4 rounds");
  if (rs.size() != 4) return;
  o.require(non_decreasing(rs, acc), "accumulated train success decreases: " + series(rs, acc));
  o.require(acc(rs[3]) >= kTrainSuccessTarget, "round 3 accumulated " + fmt(acc(rs[3])));
  o.require(test(rs[1]) >= test(rs[0]), "test single-shot " + series(rs, test));
  o.require(s < kLoopSeconds, "runtime " + fmt(s) + " s");
  if (o.pass) {
    o.detail << "accumulated train success " << series(rs, acc) << "; test single-shot " << series(rs, test) << "; "
             << fmt(s) << " s";
  }
}

const std::string kTrainHeader =
    "| Round | Reward R (×100) | Success Rate (%) | %{R ≥ 0.75} | %{R ≥ 0.5} |";

void ac6(Outcome& o) {
  TempDir d("ac6");
  const auto t0 = Clock::now();
  auto cfg = repo_config("minishop.toml", d.path());
  o.require(cfg.env.train_tasks == 50 && cfg.env.test_tasks == 20, "config is not 50 train / 20 test");
  const auto rs = Orchestrator(cfg).loop(cfg.rounds);
  const double s = since(t0);
  const auto a75 = [](const RoundReport& r) { return r.accumulated.at(Split::Train).pct_reward_ge_075; };
  const auto a50 = [](const RoundReport& r) { return r.accumulated.at(Split::Train).pct_reward_ge_05; };
  o.require(rs.size() >= 2, "fewer than 2 rounds");
  if (rs.size() < 2) return;
  o.require(non_decreasing(rs, a75), "%{R>=0.75} decreases: " + series(rs, a75));
  o.require(non_decreasing(rs, a50), "%{R>=0.5} decreases: " + series(rs, a50));

  const auto md = read_file((d / "report.md").string());
  const auto section = md.find("## Accumulated training set\n");
  o.require(section != std::string::npos && md.find("\n" + kTrainHeader + "\n", section) != std::string::npos,
            "accumulated training table header differs");
  const auto row0 = "| 0 | " + [&] {
    char b[128];
    const auto& m = rs[0].accumulated.at(Split::Train);
    std::snprintf(b, sizeof b, "%.1f | %.1f | %.1f | %.1f |", m.mean_reward, m.success_rate, m.pct_reward_ge_075,
                  m.pct_reward_ge_05);
    return std::string(b);
  }();
  o.require(md.find(row0) != std::string::npos, "round 0 row missing");
  const auto stats = dataset_stats(d / "round_0" / "round_0.dataset.jsonl");
  o.require(stats.failed_ratio == 0.0 && stats.failed_sequences == 0,
            "round 0 failed ratio " + fmt(stats.failed_ratio));
  o.require(s < kLoopSeconds, "runtime " + fmt(s) + " s");
  if (o.pass) {
    o.detail << "%{R>=0.75} " << series(rs, a75) << "; %{R>=0.5} " << series(rs, a50)
             << "; round 0 failed ratio 0.0; " << fmt(s) << " s";
  }
}

// ---------------------------------------------------------------- AC7

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TRAJLOOP_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void ac7(Outcome& o) {
  TempDir a("ac7a"), b("ac7b");
  const auto cfg = (source_dir() / "fixtures" / "treasuregrid.toml").string();
  for (const auto* d : {&a, &b}) {
    const int code = run_cli("--config " + cfg + " --out " + d->path().string() + " loop --rounds 2");
    o.require(code == 0, "loop exited " + std::to_string(code));
  }
  if (!o.pass) return;
  std::size_t compared = 0;
  std::set<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a.path()).string();
    const auto file = e.path().filename().string();
    if (file == "timing.json" || file == "events.jsonl") continue;  // wall-clock durations
    names.insert(rel);
    const auto other = b.path() / rel;
    if (!fs::exists(other) || read_file(e.path().string()) != read_file(other.string())) {
      o.require(false, rel + " differs");
    }
    ++compared;
  }
  for (const auto* must : {"round_0/round_0.traj.jsonl", "round_1/round_1.traj.jsonl", "round_0/round_0.dataset.jsonl",
                           "round_1/round_1.dataset.jsonl", "report.md", "report.json"}) {
    o.require(names.count(must) == 1, std::string("missing ") + must);
  }
  if (o.pass) o.detail << compared << " files byte-identical";
}

// ---------------------------------------------------------------- AC8

void ac8(Outcome& o) {
  const auto m = metrics_of({1.0, 0.8, 0.6, 0.4});
  o.require(std::abs(m.mean_reward - 70.0) <= kMetricTol, "mean " + fmt(m.mean_reward));
  o.require(std::abs(m.success_rate - 25.0) <= kMetricTol, "success " + fmt(m.success_rate));
  o.require(std::abs(m.pct_reward_ge_075 - 50.0) <= kMetricTol, "%>=0.75 " + fmt(m.pct_reward_ge_075));
  o.require(std::abs(m.pct_reward_ge_05 - 75.0) <= kMetricTol, "%>=0.5 " + fmt(m.pct_reward_ge_05));
  if (o.pass) o.detail << "70.0 / 25.0 / 50.0 / 75.0";
}

// ---------------------------------------------------------------- AC9

bool schema_valid(const fs::path& p, std::string& why) {
  static const std::set<std::string> kinds = {"Label", "Observation", "Reasoning", "Action"};
  const auto lines = read_lines(p.string());
  if (lines.empty()) {
    why = "empty";
    return false;
  }
  for (const auto& line : lines) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("task_id") || !j["task_id"].is_string() ||
        !j.contains("weight") || !j["weight"].is_number() || !std::isfinite(j["weight"].get<double>()) ||
        !j.contains("segments") || !j["segments"].is_array() || j["segments"].empty()) {
      why = "bad record";
      return false;
    }
    for (const auto& s : j["segments"]) {
      if (!s.is_object() || !s.contains("kind") || !s["kind"].is_string() || !kinds.count(s["kind"]) ||
          !s.contains("text") || !s["text"].is_string()) {
        why = "bad segment";
        return false;
      }
    }
  }
  return true;
}

void ac9(Outcome& o) {
  using Mode = ShapingPolicy::Mode;
  struct Variant {
    std::string name;
    Mode mode;
    double threshold;
    bool label;
  };
  const std::vector<Variant> variants = {
      {"supervised R=1.0", Mode::SupervisedOnly, 1.0, false},
      {"supervised R>=0.75", Mode::SupervisedOnly, 0.75, false},
      {"supervised R>=0.5", Mode::SupervisedOnly, 0.5, false},
      {"original reward", Mode::OriginalReward, 1.0, false},
      {"fixed 0.1", Mode::FixedSmall, 1.0, false},
      {"binarized", Mode::BinarizedMinusOne, 1.0, false},
      {"label condition", Mode::BinarizedMinusOne, 1.0, true},
  };
  std::map<std::string, std::string> seen;  // dataset content -> variant
  for (const auto& v : variants) {
    TempDir d("ac9");
    auto cfg = repo_config("minishop.toml", d.path());
    cfg.shaping.mode = v.mode;
    cfg.shaping.success_threshold = v.threshold;
    cfg.shaping.label_condition = v.label;
    cfg.shaping.fixed_value = 0.1;
    // A short round-0 fit leaves some training tasks unsolved, so round 1
    // explores and the shaping modes have failures to weigh.
    cfg.training.epochs_round0 = kAblationEpochsRound0;
    try {
      Orchestrator(cfg).loop(2);
    } catch (const std::exception& e) {
      o.require(false, v.name + ": " + e.what());
      continue;
    }
    const auto path = d / "round_1" / "round_1.dataset.jsonl";
    std::string why;
    if (!schema_valid(path, why)) {
      o.require(false, v.name + ": " + why);
      continue;
    }
    const auto content = read_file(path.string());
    const auto [it, fresh] = seen.emplace(content, v.name);
    o.require(fresh, v.name + " dataset equals " + it->second);
  }
  if (o.pass) o.detail << variants.size() << " variants, " << seen.size() << " distinct schema-valid datasets";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"AC1 decomposition identity", ac1},
      {"AC2 gradient vs finite differences", ac2},
      {"AC3 filtering invariants", ac3},
      {"AC4 sampling and budgets", ac4},
      {"AC5 TreasureGrid closed loop", ac5},
      {"AC6 MiniShop closed loop", ac6},
      {"AC7 determinism", ac7},
      {"AC8 evaluate fixture", ac8},
      {"AC9 shaping grid", ac9},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      check(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
