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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trajloop/errors.hpp"
#include "trajloop/io.hpp"
#include "trajloop/orchestrator.hpp"

using namespace trajloop;

int main(int argc, char** argv) {
  CLI::App app{"trajloop: closed-loop trajectory collection and self-training"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "TOML run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override [run] run_seed");
  app.add_option("--workers", workers, "Override [run] workers")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Override [run] out");

  int round = 0;
  auto* bootstrap = app.add_subcommand("bootstrap", "Round 0 prompting rollouts");
  auto* collect = app.add_subcommand("collect", "Evaluate on training tasks and explore failed ones");
  collect->add_option("--round", round, "Round index")->required()->check(CLI::NonNegativeNumber);
  auto* dataset = app.add_subcommand("build-dataset", "Shape the accumulated store into a dataset");
  dataset->add_option("--round", round, "Round index")->required()->check(CLI::NonNegativeNumber);
  auto* train = app.add_subcommand("train", "Train the toy policy on a round's dataset");
  train->add_option("--round", round, "Round index")->required()->check(CLI::NonNegativeNumber);

  std::string split = "test";
  int shots = 1;
  std::optional<int> eval_round;
  auto* evaluate = app.add_subcommand("evaluate", "Score a trained policy on a split");
  evaluate->add_option("--split", split, "train, valid or test")->check(CLI::IsMember({"train", "valid", "test"}));
  evaluate->add_option("--shots", shots, "Best of the last n rounds' policies")->check(CLI::PositiveNumber);
  evaluate->add_option("--round", eval_round, "Latest round to use (default: latest trained)");

  std::optional<int> rounds;
  auto* loop = app.add_subcommand("loop", "Run rounds 0..N-1, resuming completed stages");
  loop->add_option("--rounds", rounds, "Number of rounds (default from config)")->check(CLI::PositiveNumber);
  auto* report = app.add_subcommand("report", "Rewrite report.md / report.json from completed rounds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.run_seed = *seed;
    if (workers) cfg.workers = *workers;
    if (out) cfg.out = *out;
    Orchestrator orch(cfg);

    if (*bootstrap) {
      orch.collect(0);
    } else if (*collect) {
      orch.collect(round);
    } else if (*dataset) {
      const DatasetStats s = orch.build_dataset(round);
      std::cout << stats_to_json(s).dump(2) << "\n";
    } else if (*train) {
      orch.train(round);
    } else if (*evaluate) {
      const Metrics m = orch.evaluate(parse_split(split), shots, eval_round);
      nlohmann::ordered_json j;
      j["split"] = split;
      j["shots"] = shots;
      j["round"] = eval_round.value_or(orch.latest_trained_round());
      j["metrics"] = metrics_to_json(m);
      const auto path = cfg.out / "eval" /
                        (split + "_round_" + std::to_string(j["round"].get<int>()) + "_shots_" +
                         std::to_string(shots) + ".json");
      write_file_atomic(path, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
    } else if (*loop) {
      orch.loop(rounds.value_or(cfg.rounds));
      std::cout << read_file(cfg.out / "report.md");
    } else if (*report) {
      orch.write_report();
      std::cout << read_file(cfg.out / "report.md");
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
