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

#include "trajloop/environment.hpp"

#include <algorithm>

#include "trajloop/errors.hpp"
#include "trajloop/io.hpp"
#include "trajloop/minishop.hpp"
#include "trajloop/treasuregrid.hpp"

namespace trajloop {

bool is_think_action(std::string_view action) noexcept {
  return action.size() >= 7 && action.substr(0, 6) == "think[" && action.back() == ']';
}

std::vector<TaskSpec> EnvFixture::tasks_in(Split split) const {
  std::vector<TaskSpec> out;
  for (const auto& t : tasks) {
    if (t.split == split) out.push_back(t);
  }
  return out;
}

const TaskSpec& EnvFixture::task(std::string_view task_id) const {
  auto it = std::find_if(tasks.begin(), tasks.end(),
                         [&](const TaskSpec& t) { return t.task_id == task_id; });
  if (it == tasks.end()) throw ConfigError("unknown task '" + std::string(task_id) + "'");
  return *it;
}

nlohmann::json fixture_to_json(const EnvFixture& f) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : f.tasks) {
    tasks.push_back({{"task_id", t.task_id},
                     {"env_id", t.env_id},
                     {"goal_text", t.goal_text},
                     {"task_type", t.task_type},
                     {"split", to_string(t.split)}});
  }
  return {{"env_id", f.env_id}, {"max_steps", f.max_steps}, {"tasks", tasks}, {"world", f.world}};
}

EnvFixture fixture_from_json(const nlohmann::json& j) {
  EnvFixture f;
  try {
    f.env_id = j.at("env_id").get<std::string>();
    f.max_steps = j.value("max_steps", kDefaultMaxSteps);
    for (const auto& t : j.at("tasks")) {
      f.tasks.push_back(TaskSpec{t.at("task_id").get<std::string>(),
                                 t.at("env_id").get<std::string>(),
                                 t.at("goal_text").get<std::string>(),
                                 t.at("task_type").get<std::string>(),
                                 parse_split(t.at("split").get<std::string>())});
    }
    f.world = j.at("world");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed environment fixture: ") + e.what());
  }
  if (f.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  std::vector<std::string> ids;
  for (const auto& t : f.tasks) ids.push_back(t.task_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("duplicate task_id in fixture");
  }
  return f;
}

EnvFixture load_fixture(const std::string& path) {
  try {
    return fixture_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse fixture " + path + ": " + e.what());
  }
}

std::vector<std::string> registered_env_ids() {
  return {std::string(treasuregrid::kEnvId), std::string(minishop::kEnvId)};
}

std::unique_ptr<Environment> make_environment(std::shared_ptr<const EnvFixture> fixture) {
  if (!fixture) throw ConfigError("no environment fixture");
  if (fixture->env_id == treasuregrid::kEnvId) {
    return std::make_unique<treasuregrid::TreasureGridEnv>(std::move(fixture));
  }
  if (fixture->env_id == minishop::kEnvId) {
    return std::make_unique<minishop::MiniShopEnv>(std::move(fixture));
  }
  throw ConfigError("unknown env_id '" + fixture->env_id + "'");
}

EnvSession env_reset(std::shared_ptr<const EnvFixture> fixture, std::string_view env_id,
                     const TaskSpec& task, std::uint64_t seed) {
  if (!fixture || fixture->env_id != env_id) {
    throw ConfigError("env_id '" + std::string(env_id) + "' is not the fixture's environment");
  }
  if (task.env_id != env_id) {
    throw ConfigError("task " + task.task_id + " belongs to env '" + task.env_id + "'");
  }
  EnvSession s;
  s.env = make_environment(std::move(fixture));
  s.first = s.env->reset(task, seed);
  return s;
}

}  // namespace trajloop
