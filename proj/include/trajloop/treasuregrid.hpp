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

// TreasureGrid: a small household text world with binary reward. The agent
// starts in a hallway, searches rooms and containers for one object and must
// put it on a target surface.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trajloop/environment.hpp"

namespace trajloop::treasuregrid {

inline constexpr std::string_view kEnvId = "treasuregrid";
inline constexpr std::string_view kHallway = "hallway";
inline constexpr std::string_view kThinkAction = "think[plan the next step]";

struct Receptacle {
  std::string name;
  bool openable = false;
  bool closed = false;
  std::vector<std::string> objects;

  bool operator==(const Receptacle&) const = default;
};

struct Room {
  std::string name;
  std::vector<Receptacle> receptacles;

  bool operator==(const Room&) const = default;
};

struct Layout {
  std::string task_id;
  std::vector<Room> rooms;
  std::string goal_object;
  std::string goal_receptacle;

  bool operator==(const Layout&) const = default;
};

struct GeneratorParams {
  int rooms = 3;
  int receptacles_per_room = 2;
  int distractors = 3;
  double closed_probability = 0.5;
  int train_tasks = 50;
  int valid_tasks = 10;
  int test_tasks = 20;
  int max_steps = kDefaultMaxSteps;
  std::uint64_t seed = 0;
};

std::string goal_text(const Layout& layout);
std::string task_type(const Layout& layout);

EnvFixture generate(const GeneratorParams& params);
EnvFixture make_fixture(std::vector<Layout> layouts, std::vector<Split> splits,
                        int max_steps = kDefaultMaxSteps);

nlohmann::json layout_to_json(const Layout& l);
Layout layout_from_json(const nlohmann::json& j);

class TreasureGridEnv final : public Environment {
 public:
  explicit TreasureGridEnv(std::shared_ptr<const EnvFixture> fixture);

  std::string_view env_id() const noexcept override { return kEnvId; }
  EnvObservation reset(const TaskSpec& task, std::uint64_t seed) override;
  ActionOutcome step(std::string_view action) override;
  std::vector<std::string> action_space() const override;
  bool terminal() const noexcept override { return terminal_; }

 private:
  Receptacle* find_here(std::string_view name);
  std::string describe_room() const;
  std::string holding_suffix() const;
  ActionOutcome invalid() const;
  ActionOutcome finish(std::string text, bool success);

  std::shared_ptr<const EnvFixture> fixture_;
  std::vector<Layout> layouts_;
  Layout state_;
  std::optional<std::size_t> room_;  // nullopt = hallway
  std::optional<std::string> holding_;
  int steps_taken_ = 0;
  bool started_ = false;
  bool terminal_ = false;
};

}  // namespace trajloop::treasuregrid
