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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "trajloop/composer.hpp"
#include "trajloop/environment.hpp"
#include "trajloop/http_backend.hpp"
#include "trajloop/objective.hpp"

namespace trajloop {

struct EnvConfig {
  std::string id = "treasuregrid";
  std::string fixture;  // optional path to a fixture JSON; generated when empty
  std::uint64_t seed = 7;
  int train_tasks = 50;
  int valid_tasks = 10;
  int test_tasks = 20;
  int max_steps = kDefaultMaxSteps;
  // treasuregrid
  int rooms = 3;
  int receptacles_per_room = 2;
  int distractors = 3;
  double closed_probability = 0.5;
  // minishop
  int products_per_category = 8;
  int page_size = 3;
  int max_required_attributes = 2;
  int required_options = 1;
};

struct BackendConfig {
  std::string kind = "toy";  // toy | scripted | http
  double prior_strength = 0.0;
  double temperature = 1.0;  // used by the prompting role only
  std::string script;        // scripted
  HttpBackendConfig http;
};

struct TrainerSettings {
  int epochs_round0 = 15;
  TrainerConfig trainer;
  unsigned feature_bits = 14;
  double reason_prior = 3.0;
};

struct RunConfig {
  EnvConfig env;
  ExplorationConfig exploration;
  ShapingPolicy shaping;
  BackendConfig policy;
  BackendConfig actre;
  BackendConfig prompting;
  TrainerSettings training;
  int eval_max_steps = 60;
  int rounds = 4;
  std::uint64_t run_seed = 1;
  int workers = 1;
  std::filesystem::path out = "runs/default";
  std::filesystem::path prompts_dir = "prompts";

  /// Throws ConfigError on out-of-range values or unknown backend kinds.
  void validate() const;
};

/// Parses TOML text. Unknown sections or keys are a ConfigError.
/// Relative paths are resolved against `base_dir`.
RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Everything that influences results; `out` and `workers` are left out.
nlohmann::ordered_json config_to_json(const RunConfig& c);
std::string config_hash(const RunConfig& c);

EnvFixture build_fixture(const EnvConfig& env);

}  // namespace trajloop
