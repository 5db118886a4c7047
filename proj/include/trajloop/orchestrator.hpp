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

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajloop/config.hpp"
#include "trajloop/objective.hpp"
#include "trajloop/store.hpp"
#include "trajloop/toy_policy.hpp"

namespace trajloop {

/// Reward metrics over a set of tasks. Everything is on a 0..100 scale.
struct Metrics {
  std::size_t tasks = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double pct_reward_ge_075 = 0.0;
  double pct_reward_ge_05 = 0.0;

  bool operator==(const Metrics&) const = default;
};

/// Throws DomainError for an empty reward list.
Metrics metrics_of(const std::vector<double>& rewards);

/// Per-task best reward over `rollouts`; tasks listed in `tasks` that have no
/// rollout count as reward 0.
std::vector<double> best_rewards(const std::vector<TaskSpec>& tasks,
                                 const std::vector<std::vector<Trajectory>>& rollouts);

/// `per_round` holds one rollout set per round, oldest first. shots=1 scores
/// the last set alone; shots=n takes per-task best over the last n sets.
Metrics evaluate_shots(const std::vector<TaskSpec>& tasks,
                       const std::vector<std::vector<Trajectory>>& per_round, int shots);

nlohmann::ordered_json metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::json& j);

struct RoundReport {
  int round = 0;
  std::map<Split, Metrics> single_shot;
  std::map<Split, Metrics> accumulated;
  std::map<std::string, double> accumulated_success_by_type;  // training split
  std::optional<DatasetStats> dataset;
  std::size_t store_size = 0;

  bool operator==(const RoundReport&) const = default;
};

nlohmann::ordered_json report_to_json(const RoundReport& r);
RoundReport report_from_json(const nlohmann::json& j);
std::string render_report_markdown(const std::vector<RoundReport>& rounds, const std::string& env_id);

enum class Stage { Collect, Dataset, Train, Evaluate, Report };
std::string_view to_string(Stage s) noexcept;

/// One experiment directory. Every stage reads its inputs from and writes its
/// outputs to `<out>/round_<k>/`, so an interrupted run resumes by skipping the
/// stages that are already recorded as complete.
class Orchestrator {
 public:
  explicit Orchestrator(RunConfig config);
  ~Orchestrator();

  const RunConfig& config() const noexcept { return config_; }
  const EnvFixture& fixture() const noexcept { return *fixture_; }
  std::filesystem::path round_dir(int k) const;

  bool completed(int k, Stage s) const;

  /// Round 0: one prompting rollout per training task. Round k >= 1: greedy
  /// evaluation of the round k-1 policy on training tasks, then exploration on
  /// every failed task, filtered and appended to the store.
  void collect(int k);
  DatasetStats build_dataset(int k);
  void train(int k);
  void evaluate_round(int k);
  RoundReport report_round(int k);

  /// Runs the missing stages of round k.
  RoundReport run_round(int k);
  /// Runs rounds 0..rounds-1 and writes report.md / report.json.
  std::vector<RoundReport> loop(int rounds);

  /// Metrics of the round-`k` policy (default: latest trained) on `split`.
  Metrics evaluate(Split split, int shots, std::optional<int> k = std::nullopt);

  std::vector<RoundReport> completed_reports() const;
  void write_report() const;

  TrajectoryStore load_store(int up_to_round) const;
  int latest_trained_round() const;

 private:
  struct Impl;
  RunConfig config_;
  std::shared_ptr<const EnvFixture> fixture_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace trajloop
