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

#include "trajloop/lexicon.hpp"

#include "trajloop/errors.hpp"

namespace trajloop {

std::string reasoning_text(std::string_view action_text, std::string_view goal_phrase) {
  return "I should " + std::string(action_text) + " because " + std::string(goal_phrase) + ".";
}

std::optional<std::string> reasoning_action(std::string_view reasoning) {
  constexpr std::string_view head = "I should ";
  if (reasoning.substr(0, head.size()) != head) return std::nullopt;
  const auto because = reasoning.rfind(" because ");
  if (because == std::string_view::npos || because < head.size()) return std::nullopt;
  return std::string(reasoning.substr(head.size(), because - head.size()));
}

std::shared_ptr<const Lexicon> make_lexicon(std::string_view env_id) {
  if (env_id == "treasuregrid") return treasuregrid::make_lexicon();
  if (env_id == "minishop") return minishop::make_lexicon();
  throw ConfigError("no lexicon for environment '" + std::string(env_id) + "'");
}

}  // namespace trajloop
