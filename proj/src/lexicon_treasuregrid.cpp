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

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "trajloop/environment.hpp"
#include "trajloop/errors.hpp"
#include "trajloop/lexicon.hpp"
#include "trajloop/treasuregrid.hpp"

namespace trajloop::treasuregrid {

namespace {

const std::vector<std::string> kActionTokens = {
    "go_target",  "go_goal_room", "go_unvisited", "go_next", "open",   "take_goal",
    "take_other", "put_target",   "put_other",    "examine", "think"};

const std::vector<std::string> kObservationTokens = {
    "start", "ok",   "invalid", "arrive_goal", "arrive_target", "arrive", "open_goal", "open",
    "take_goal", "take", "put_success", "put", "examine", "truncated", "other"};

bool starts_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(0, p.size()) == p;
}

bool contains(std::string_view s, std::string_view p) { return s.find(p) != std::string_view::npos; }

std::string between(std::string_view s, std::string_view open, std::string_view close,
                    std::size_t from = 0) {
  const auto a = s.find(open, from);
  if (a == std::string_view::npos) return {};
  const auto b = s.find(close, a + open.size());
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(a + open.size(), b - a - open.size()));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto end = s.find(", ", pos);
    if (end == std::string_view::npos) end = s.size();
    if (end > pos) out.emplace_back(s.substr(pos, end - pos));
    pos = end + 2;
  }
  return out;
}

struct Seen {
  bool closed = false;
  std::vector<std::string> objects;
};

struct Belief {
  std::string goal, target, target_room;
  std::vector<std::string> rooms;
  std::string location = std::string(kHallway);
  std::set<std::string> visited;
  std::string holding;
  // Receptacles of each room in listing order, with what was last seen.
  std::map<std::string, std::vector<std::pair<std::string, Seen>>> seen;

  std::vector<std::pair<std::string, Seen>>* here() {
    auto it = seen.find(location);
    return it == seen.end() ? nullptr : &it->second;
  }
  const std::vector<std::pair<std::string, Seen>>* here() const {
    auto it = seen.find(location);
    return it == seen.end() ? nullptr : &it->second;
  }
  Seen* receptacle(std::string_view name) {
    auto* h = here();
    if (!h) return nullptr;
    for (auto& [n, s] : *h) {
      if (n == name) return &s;
    }
    return nullptr;
  }
  bool in_room() const { return location != kHallway; }
  std::string next_room() const {
    if (rooms.empty()) return "hallway";
    auto it = std::find(rooms.begin(), rooms.end(), location);
    if (it == rooms.end()) return rooms.front();
    return rooms[static_cast<std::size_t>(it - rooms.begin() + 1) % rooms.size()];
  }
  // Room other than the current one where the goal object was last seen.
  std::optional<std::string> goal_room() const {
    for (const auto& [room, list] : seen) {
      if (room == location) continue;
      for (const auto& [n, s] : list) {
        if (!s.closed && std::find(s.objects.begin(), s.objects.end(), goal) != s.objects.end()) {
          return room;
        }
      }
    }
    return std::nullopt;
  }
  std::optional<std::string> first_unvisited() const {
    for (const auto& r : rooms) {
      if (r != location && !visited.count(r)) return r;
    }
    return std::nullopt;
  }
  // Receptacle holding the goal object in the current room, if seen.
  std::optional<std::string> goal_here() const {
    const auto* h = here();
    if (!h) return std::nullopt;
    for (const auto& [n, s] : *h) {
      if (!s.closed && std::find(s.objects.begin(), s.objects.end(), goal) != s.objects.end()) {
        return n;
      }
    }
    return std::nullopt;
  }
};

void parse_goal(std::string_view first, Belief& b) {
  b.goal = between(first, "put the ", " on the ");
  b.target = between(first, " on the ", ".");
  b.rooms = split_list(between(first, "Rooms: ", "."));
  b.target_room = between(first, "The " + b.target + " is in the ", ".");
}

void parse_room(std::string_view obs, Belief& b) {
  b.location = between(obs, "You arrive at the ", ".");
  b.visited.insert(b.location);
  auto& list = b.seen[b.location];
  list.clear();
  const auto at = obs.find("You see ");
  if (at != std::string_view::npos) {
    const auto end = obs.find(".", at);
    const auto body = obs.substr(at + 8, end - at - 8);
    // "a shelf (mug, key), a drawer (closed)"; commas inside parentheses are not separators.
    std::size_t pos = 0;
    while (pos < body.size()) {
      const auto open = body.find(" (", pos);
      const auto close = body.find(")", open);
      if (open == std::string_view::npos || close == std::string_view::npos) break;
      std::string_view name = body.substr(pos, open - pos);
      if (starts_with(name, "an ")) name.remove_prefix(3);
      else if (starts_with(name, "a ")) name.remove_prefix(2);
      const auto inner = body.substr(open + 2, close - open - 2);
      Seen s;
      if (inner == "closed") s.closed = true;
      else if (inner != "empty") s.objects = split_list(inner);
      list.emplace_back(std::string(name), std::move(s));
      pos = close + 1;
      if (body.substr(pos, 2) == ", ") pos += 2;
    }
  }
  b.holding = between(obs, "You are holding the ", ".");
}

void observe(std::string_view obs, Belief& b) {
  if (starts_with(obs, "You arrive at the ")) {
    parse_room(obs, b);
  } else if (starts_with(obs, "You open the ")) {
    const auto name = between(obs, "You open the ", ".");
    if (auto* s = b.receptacle(name)) {
      s->closed = false;
      s->objects = contains(obs, "In it you see: ") ? split_list(between(obs, "In it you see: ", "."))
                                                   : std::vector<std::string>{};
    }
  } else if (starts_with(obs, "The ")) {
    const auto rest = obs.substr(4);
    const auto sp = rest.find(' ');
    if (sp == std::string_view::npos) return;
    if (auto* s = b.receptacle(rest.substr(0, sp))) {
      if (contains(obs, " is closed.")) {
        s->closed = true;
      } else {
        s->closed = false;
        s->objects = contains(obs, " holds: ") ? split_list(between(obs, " holds: ", "."))
                                               : std::vector<std::string>{};
      }
    }
  } else if (starts_with(obs, "You take the ")) {
    const auto obj = between(obs, "You take the ", " from the ");
    const auto from = between(obs, " from the ", ".");
    if (auto* s = b.receptacle(from)) {
      auto it = std::find(s->objects.begin(), s->objects.end(), obj);
      if (it != s->objects.end()) s->objects.erase(it);
    }
    b.holding = obj;
  } else if (starts_with(obs, "You put the ")) {
    const auto obj = between(obs, "You put the ", " on the ");
    const auto on = between(obs, " on the ", ".");
    if (auto* s = b.receptacle(on)) s->objects.push_back(obj);
    b.holding.clear();
  }
}

std::string observation_token(std::size_t t, std::string_view obs, const Belief& after) {
  if (t == 0) return "start";
  if (contains(obs, "ran out of steps")) return "truncated";
  if (obs == kInvalidActionText) return "invalid";
  if (obs == kThinkObservation) return "ok";
  if (contains(obs, "Task complete.")) return "put_success";
  if (starts_with(obs, "You arrive at the ")) {
    if (after.goal_here()) return "arrive_goal";
    if (after.location == after.target_room) return "arrive_target";
    return "arrive";
  }
  if (starts_with(obs, "You open the ")) return after.goal_here() ? "open_goal" : "open";
  if (starts_with(obs, "You take the ")) return after.holding == after.goal ? "take_goal" : "take";
  if (starts_with(obs, "You put the ")) return "put";
  if (starts_with(obs, "The ")) return "examine";
  return "other";
}

std::vector<std::string> state_features(const Belief& b) {
  std::vector<std::string> f;
  if (!b.in_room()) f.emplace_back("loc:hallway");
  else if (b.location == b.target_room) f.emplace_back("loc:target_room");
  else f.emplace_back("loc:room");
  if (b.holding.empty()) f.emplace_back("hold:none");
  else if (b.holding == b.goal) f.emplace_back("hold:goal");
  else f.emplace_back("hold:other");
  if (b.goal_here()) f.emplace_back("here:goal");
  bool closed = false, other = false;
  if (const auto* h = b.here()) {
    for (const auto& [n, s] : *h) {
      closed = closed || s.closed;
      for (const auto& o : s.objects) other = other || (!s.closed && o != b.goal);
    }
  }
  if (closed) f.emplace_back("here:closed");
  if (other) f.emplace_back("here:other_object");
  if (!closed && !b.goal_here() && b.in_room()) f.emplace_back("here:exhausted");
  if (b.first_unvisited()) f.emplace_back("unvisited");
  if (b.holding != b.goal && b.goal_room()) f.emplace_back("goal_elsewhere");
  return f;
}

// Words of the observation with task-specific names replaced by roles.
std::vector<std::string> word_features(std::string_view obs, const Belief& b) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    std::string w = cur;
    if (w == b.goal) w = "GOAL";
    else if (w == b.target) w = "TARGET";
    else if (w == b.target_room) w = "TROOM";
    out.push_back("w:" + w);
    cur.clear();
  };
  for (char c : obs) {
    if (std::isalpha(static_cast<unsigned char>(c))) cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else flush();
  }
  flush();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> renderings(const Belief& b) {
  const auto* h = b.here();
  const std::string first_here = h && !h->empty() ? h->front().first : "room";
  std::string first_closed = first_here;
  std::string other_obj, other_from;
  std::string open_not_target;
  if (h) {
    for (const auto& [n, s] : *h) {
      if (s.closed && first_closed == first_here) first_closed = n;
    }
    for (const auto& [n, s] : *h) {
      if (s.closed) continue;
      if (open_not_target.empty() && n != b.target) open_not_target = n;
      for (const auto& o : s.objects) {
        if (other_obj.empty() && o != b.goal) {
          other_obj = o;
          other_from = n;
        }
      }
    }
  }
  const std::string carried = b.holding.empty() ? b.goal : b.holding;
  const auto goal_at = b.goal_here();
  return {
      "go to " + b.target_room,
      "go to " + b.goal_room().value_or(b.next_room()),
      "go to " + b.first_unvisited().value_or(b.next_room()),
      "go to " + b.next_room(),
      "open " + first_closed,
      "take " + b.goal + " from " + goal_at.value_or(first_here),
      other_obj.empty() ? "take " + b.goal + " from floor" : "take " + other_obj + " from " + other_from,
      "put " + carried + " on " + b.target,
      "put " + carried + " on " + (open_not_target.empty() ? std::string("floor") : open_not_target),
      "examine " + first_here,
      std::string(kThinkAction),
  };
}

std::optional<std::string> classify(std::string_view a, const Belief& b) {
  if (is_think_action(a)) return "think";
  if (starts_with(a, "go to ")) {
    const auto room = a.substr(6);
    if (room == b.target_room) return "go_target";
    if (auto g = b.goal_room(); g && room == *g) return "go_goal_room";
    if (auto u = b.first_unvisited(); u && room == *u) return "go_unvisited";
    return "go_next";
  }
  if (starts_with(a, "open ")) return "open";
  if (starts_with(a, "examine ")) return "examine";
  if (starts_with(a, "take ") && contains(a, " from ")) {
    return a.substr(5, a.find(" from ") - 5) == b.goal ? "take_goal" : "take_other";
  }
  if (starts_with(a, "put ") && contains(a, " on ")) {
    return a.substr(a.find(" on ") + 4) == b.target ? "put_target" : "put_other";
  }
  return std::nullopt;
}

class TreasureGridLexicon final : public Lexicon {
 public:
  std::string_view env_id() const noexcept override { return kEnvId; }
  const std::vector<std::string>& action_tokens() const noexcept override { return kActionTokens; }
  const std::vector<std::string>& observation_tokens() const noexcept override {
    return kObservationTokens;
  }

  std::vector<StepAnalysis> analyze(const Transcript& tr) const override {
    std::vector<StepAnalysis> out;
    Belief b;
    if (!tr.steps.empty()) parse_goal(tr.steps.front().observation, b);
    std::string prev = "none";
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const auto& s = tr.steps[t];
      observe(s.observation, b);
      StepAnalysis a;
      a.observation_token = observation_token(t, s.observation, b);
      a.features = state_features(b);
      a.text_features = word_features(s.observation, b);
      a.features.push_back("obs:" + a.observation_token);
      a.features.push_back("prev:" + prev);
      a.renderings = renderings(b);
      if (s.action) a.action_token = classify(*s.action, b);
      if (s.reasoning) {
        const auto named = reasoning_action(*s.reasoning);
        const auto cls = named ? classify(*named, b) : std::nullopt;
        a.reason_token = cls ? std::string(kReasonPrefix) + *cls : std::string(kReasonOther);
      }
      prev = a.action_token.value_or("unknown");
      out.push_back(std::move(a));
    }
    return out;
  }

  std::vector<PriorRule> prior_rules() const override {
    return {{"hold:goal", "put_target", 1.0},  {"loc:target_room", "put_target", 1.0},
            {"hold:goal", "go_target", 1.5},   {"here:goal", "take_goal", 2.0},
            {"here:closed", "open", 1.0},      {"here:exhausted", "go_unvisited", 1.0}, {"goal_elsewhere", "go_goal_room", 2.0},
            {"loc:hallway", "go_unvisited", 1.0}};
  }

  std::string goal_phrase(const Transcript& tr) const override {
    Belief b;
    if (!tr.steps.empty()) parse_goal(tr.steps.front().observation, b);
    return "the " + b.goal + " has to end up on the " + b.target;
  }
};

}  // namespace

std::shared_ptr<const Lexicon> make_lexicon() { return std::make_shared<TreasureGridLexicon>(); }

}  // namespace trajloop::treasuregrid
