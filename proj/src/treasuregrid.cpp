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

#include "trajloop/treasuregrid.hpp"

#include <algorithm>
#include <cstdio>

#include "trajloop/errors.hpp"
#include "trajloop/hash.hpp"

namespace trajloop::treasuregrid {

namespace {

constexpr std::string_view kRoomNames[] = {"kitchen", "study",   "bedroom", "garage",
                                           "bathroom", "attic",  "cellar",  "pantry"};
constexpr std::string_view kOpenables[] = {"drawer", "cabinet", "box", "fridge", "safe", "chest"};
constexpr std::string_view kSurfaces[] = {"shelf", "table", "desk", "counter", "bed", "sofa", "stand"};
constexpr std::string_view kObjects[] = {"key",    "mug",  "apple", "book", "lamp",
                                         "coin",   "pen",  "candle", "spoon", "watch",
                                         "ring",   "phone", "map",   "hat",  "cup"};

std::string article(std::string_view noun) {
  const char c = noun.empty() ? 'x' : noun.front();
  const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  return std::string(vowel ? "an " : "a ") + std::string(noun);
}

std::string join(const std::vector<std::string>& xs, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

template <class T, std::size_t N>
std::vector<std::string> shuffled(const T (&pool)[N], Rng& rng) {
  std::vector<std::string> v(std::begin(pool), std::end(pool));
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  return v;
}

std::string describe_receptacle(const Receptacle& r) {
  std::string s = article(r.name);
  if (r.closed) return s + " (closed)";
  if (r.objects.empty()) return s + " (empty)";
  return s + " (" + join(r.objects, ", ") + ")";
}

bool starts_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(0, p.size()) == p;
}

}  // namespace

std::string goal_text(const Layout& layout) {
  return "put the " + layout.goal_object + " on the " + layout.goal_receptacle;
}

std::string task_type(const Layout& layout) {
  for (const auto& room : layout.rooms) {
    for (const auto& r : room.receptacles) {
      if (std::find(r.objects.begin(), r.objects.end(), layout.goal_object) != r.objects.end()) {
        return r.closed ? "search" : "pick";
      }
    }
  }
  return "pick";
}

nlohmann::json layout_to_json(const Layout& l) {
  nlohmann::json rooms = nlohmann::json::array();
  for (const auto& room : l.rooms) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : room.receptacles) {
      recs.push_back({{"name", r.name},
                      {"openable", r.openable},
                      {"closed", r.closed},
                      {"objects", r.objects}});
    }
    rooms.push_back({{"name", room.name}, {"receptacles", recs}});
  }
  return {{"task_id", l.task_id},
          {"rooms", rooms},
          {"goal_object", l.goal_object},
          {"goal_receptacle", l.goal_receptacle}};
}

Layout layout_from_json(const nlohmann::json& j) {
  Layout l;
  l.task_id = j.at("task_id").get<std::string>();
  l.goal_object = j.at("goal_object").get<std::string>();
  l.goal_receptacle = j.at("goal_receptacle").get<std::string>();
  for (const auto& jr : j.at("rooms")) {
    Room room;
    room.name = jr.at("name").get<std::string>();
    for (const auto& rc : jr.at("receptacles")) {
      room.receptacles.push_back(Receptacle{rc.at("name").get<std::string>(),
                                            rc.at("openable").get<bool>(),
                                            rc.at("closed").get<bool>(),
                                            rc.at("objects").get<std::vector<std::string>>()});
    }
    l.rooms.push_back(std::move(room));
  }
  return l;
}

EnvFixture make_fixture(std::vector<Layout> layouts, std::vector<Split> splits, int max_steps) {
  if (layouts.size() != splits.size()) throw ConfigError("one split per layout required");
  EnvFixture f;
  f.env_id = std::string(kEnvId);
  f.max_steps = max_steps;
  nlohmann::json jl = nlohmann::json::array();
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    f.tasks.push_back(TaskSpec{layouts[i].task_id, f.env_id, goal_text(layouts[i]),
                               task_type(layouts[i]), splits[i]});
    jl.push_back(layout_to_json(layouts[i]));
  }
  f.world = {{"layouts", jl}};
  return f;
}

EnvFixture generate(const GeneratorParams& p) {
  const int n_rooms = std::clamp(p.rooms, 1, static_cast<int>(std::size(kRoomNames)));
  const int per_room = std::clamp(p.receptacles_per_room, 1, 4);
  if (n_rooms * per_room > static_cast<int>(std::size(kOpenables) + std::size(kSurfaces))) {
    throw ConfigError("too many receptacles requested");
  }
  std::vector<Layout> layouts;
  std::vector<Split> splits;
  const std::pair<Split, int> plan[] = {
      {Split::Train, p.train_tasks}, {Split::Valid, p.valid_tasks}, {Split::Test, p.test_tasks}};
  for (const auto& [split, count] : plan) {
    for (int i = 0; i < count; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "tg-%s-%03d", std::string(to_string(split)).c_str(), i);
      Rng rng(derive_seed(p.seed, id));
      Layout l;
      l.task_id = id;
      auto room_names = shuffled(kRoomNames, rng);
      auto openables = shuffled(kOpenables, rng);
      auto surfaces = shuffled(kSurfaces, rng);
      auto objects = shuffled(kObjects, rng);
      std::size_t next_open = 0, next_surface = 0;
      for (int r = 0; r < n_rooms; ++r) {
        Room room{room_names[static_cast<std::size_t>(r)], {}};
        for (int k = 0; k < per_room; ++k) {
          const bool want_open = rng.uniform() < 0.5;
          Receptacle rc;
          if ((want_open && next_open < openables.size()) || next_surface >= surfaces.size()) {
            rc.name = openables[next_open++];
            rc.openable = true;
            rc.closed = rng.uniform() < p.closed_probability;
          } else {
            rc.name = surfaces[next_surface++];
          }
          room.receptacles.push_back(std::move(rc));
        }
        l.rooms.push_back(std::move(room));
      }
      // The target must be a surface; convert one receptacle if none exists.
      std::vector<std::pair<std::size_t, std::size_t>> surface_slots, all_slots;
      for (std::size_t r = 0; r < l.rooms.size(); ++r) {
        for (std::size_t k = 0; k < l.rooms[r].receptacles.size(); ++k) {
          all_slots.emplace_back(r, k);
          if (!l.rooms[r].receptacles[k].openable) surface_slots.emplace_back(r, k);
        }
      }
      if (surface_slots.empty()) {
        auto [r, k] = all_slots[rng.below(all_slots.size())];
        l.rooms[r].receptacles[k] = Receptacle{surfaces[next_surface++], false, false, {}};
        surface_slots.emplace_back(r, k);
      }
      const auto target = surface_slots[rng.below(surface_slots.size())];
      l.goal_receptacle = l.rooms[target.first].receptacles[target.second].name;
      std::vector<std::pair<std::size_t, std::size_t>> sources;
      for (const auto& s : all_slots) {
        if (s != target) sources.push_back(s);
      }
      if (sources.empty()) throw ConfigError("layout needs at least two receptacles");
      l.goal_object = objects[0];
      const auto src = sources[rng.below(sources.size())];
      l.rooms[src.first].receptacles[src.second].objects.push_back(l.goal_object);
      for (int d = 0; d < p.distractors && d + 1 < static_cast<int>(objects.size()); ++d) {
        const auto at = all_slots[rng.below(all_slots.size())];
        l.rooms[at.first].receptacles[at.second].objects.push_back(objects[static_cast<std::size_t>(d) + 1]);
      }
      layouts.push_back(std::move(l));
      splits.push_back(split);
    }
  }
  return make_fixture(std::move(layouts), std::move(splits), p.max_steps);
}

TreasureGridEnv::TreasureGridEnv(std::shared_ptr<const EnvFixture> fixture)
    : fixture_(std::move(fixture)) {
  if (!fixture_ || fixture_->env_id != kEnvId) throw ConfigError("not a treasuregrid fixture");
}

EnvObservation TreasureGridEnv::reset(const TaskSpec& task, std::uint64_t /*seed*/) {
  if (task.env_id != kEnvId) throw ConfigError("task " + task.task_id + " is not a treasuregrid task");
  const auto& layouts = fixture_->world.at("layouts");
  auto it = std::find_if(layouts.begin(), layouts.end(), [&](const nlohmann::json& j) {
    return j.at("task_id").get_ref<const std::string&>() == task.task_id;
  });
  if (it == layouts.end()) throw ConfigError("no layout for task " + task.task_id);
  state_ = layout_from_json(*it);
  room_.reset();
  holding_.reset();
  steps_taken_ = 0;
  started_ = true;
  terminal_ = false;

  std::vector<std::string> names;
  std::string target_room;
  for (const auto& room : state_.rooms) {
    names.push_back(room.name);
    for (const auto& r : room.receptacles) {
      if (r.name == state_.goal_receptacle) target_room = room.name;
    }
  }
  std::string text = "Your task is to: " + goal_text(state_) + ".\n";
  text += "You are in the " + std::string(kHallway) + ". Rooms: " + join(names, ", ") + ". ";
  text += "The " + state_.goal_receptacle + " is in the " + target_room + ".";
  return EnvObservation{std::move(text), false, std::nullopt};
}

Receptacle* TreasureGridEnv::find_here(std::string_view name) {
  if (!room_) return nullptr;
  for (auto& r : state_.rooms[*room_].receptacles) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string TreasureGridEnv::describe_room() const {
  std::vector<std::string> parts;
  for (const auto& r : state_.rooms[*room_].receptacles) parts.push_back(describe_receptacle(r));
  return "You see " + join(parts, ", ") + ".";
}

std::string TreasureGridEnv::holding_suffix() const {
  return holding_ ? " You are holding the " + *holding_ + "." : "";
}

ActionOutcome TreasureGridEnv::invalid() const {
  return ActionOutcome{EnvObservation{std::string(kInvalidActionText), false, std::nullopt}, false};
}

ActionOutcome TreasureGridEnv::finish(std::string text, bool success) {
  ++steps_taken_;
  if (success) {
    terminal_ = true;
    return ActionOutcome{EnvObservation{std::move(text), true, 1.0}, true};
  }
  if (steps_taken_ >= fixture_->max_steps) {
    terminal_ = true;
    return ActionOutcome{EnvObservation{text + " You ran out of steps.", true, 0.0}, true};
  }
  return ActionOutcome{EnvObservation{std::move(text), false, std::nullopt}, true};
}

ActionOutcome TreasureGridEnv::step(std::string_view action) {
  if (!started_) throw UsageError("step before reset");
  if (terminal_) throw UsageError("step after the episode ended");

  if (is_think_action(action)) return finish(std::string(kThinkObservation), false);

  if (starts_with(action, "go to ")) {
    const auto target = action.substr(6);
    for (std::size_t i = 0; i < state_.rooms.size(); ++i) {
      if (state_.rooms[i].name == target && room_ != i) {
        room_ = i;
        return finish("You arrive at the " + state_.rooms[i].name + ". " + describe_room() +
                          holding_suffix(),
                      false);
      }
    }
    return invalid();
  }
  if (starts_with(action, "open ")) {
    Receptacle* r = find_here(action.substr(5));
    if (!r || !r->openable || !r->closed) return invalid();
    r->closed = false;
    if (r->objects.empty()) return finish("You open the " + r->name + ". It is empty.", false);
    return finish("You open the " + r->name + ". In it you see: " + join(r->objects, ", ") + ".",
                  false);
  }
  if (starts_with(action, "examine ")) {
    Receptacle* r = find_here(action.substr(8));
    if (!r) return invalid();
    if (r->closed) return finish("The " + r->name + " is closed.", false);
    if (r->objects.empty()) return finish("The " + r->name + " is empty.", false);
    return finish("The " + r->name + " holds: " + join(r->objects, ", ") + ".", false);
  }
  if (starts_with(action, "take ")) {
    const auto rest = action.substr(5);
    const auto sep = rest.find(" from ");
    if (sep == std::string_view::npos || holding_) return invalid();
    const std::string obj(rest.substr(0, sep));
    Receptacle* r = find_here(rest.substr(sep + 6));
    if (!r || r->closed) return invalid();
    auto it = std::find(r->objects.begin(), r->objects.end(), obj);
    if (it == r->objects.end()) return invalid();
    r->objects.erase(it);
    holding_ = obj;
    return finish("You take the " + obj + " from the " + r->name + ".", false);
  }
  if (starts_with(action, "put ")) {
    const auto rest = action.substr(4);
    const auto sep = rest.find(" on ");
    if (sep == std::string_view::npos || !holding_) return invalid();
    const std::string obj(rest.substr(0, sep));
    Receptacle* r = find_here(rest.substr(sep + 4));
    if (!r || r->closed || obj != *holding_) return invalid();
    r->objects.push_back(obj);
    holding_.reset();
    const bool success = obj == state_.goal_object && r->name == state_.goal_receptacle;
    std::string text = "You put the " + obj + " on the " + r->name + ".";
    if (success) text += " Task complete.";
    return finish(std::move(text), success);
  }
  return invalid();
}

std::vector<std::string> TreasureGridEnv::action_space() const {
  std::vector<std::string> out;
  if (!started_ || terminal_) return out;
  for (std::size_t i = 0; i < state_.rooms.size(); ++i) {
    if (room_ != i) out.push_back("go to " + state_.rooms[i].name);
  }
  if (room_) {
    for (const auto& r : state_.rooms[*room_].receptacles) {
      out.push_back("examine " + r.name);
      if (r.openable && r.closed) out.push_back("open " + r.name);
      if (r.closed) continue;
      if (!holding_) {
        for (const auto& o : r.objects) out.push_back("take " + o + " from " + r.name);
      } else {
        out.push_back("put " + *holding_ + " on " + r.name);
      }
    }
  }
  out.emplace_back(kThinkAction);
  return out;
}

}  // namespace trajloop::treasuregrid
