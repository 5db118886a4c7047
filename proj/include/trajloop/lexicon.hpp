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

// Template vocabularies used by the toy policy. A lexicon reads an episode
// transcript and describes every step in terms of template tokens: which
// concrete action each action token stands for, which token an observed
// action or observation falls under, and a bag of state features.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajloop/transcript.hpp"

namespace trajloop {

struct StepAnalysis {
  std::vector<std::string> features;          // state after observing o_t
  std::vector<std::string> text_features;     // words of o_t; used for predicting o_{t+1}
  std::string observation_token;              // class of o_t
  std::vector<std::string> renderings;        // concrete text per action token
  std::optional<std::string> action_token;    // class of the action taken at t
  std::optional<std::string> reason_token;    // class of the reasoning at t
};

/// A preference of the form "feature makes reasoning token more likely".
struct PriorRule {
  std::string feature;
  std::string action_token;
  double weight = 1.0;
};

class Lexicon {
 public:
  virtual ~Lexicon() = default;
  virtual std::string_view env_id() const noexcept = 0;
  virtual const std::vector<std::string>& action_tokens() const noexcept = 0;
  virtual const std::vector<std::string>& observation_tokens() const noexcept = 0;

  /// One entry per transcript step. Steps whose action text fits no template
  /// get action_token = nullopt.
  virtual std::vector<StepAnalysis> analyze(const Transcript& tr) const = 0;

  /// Rough common-sense preferences, used to stand in for a prompted model
  /// that already knows the domain.
  virtual std::vector<PriorRule> prior_rules() const = 0;

  /// Short phrase naming the goal, used in template rationales.
  virtual std::string goal_phrase(const Transcript& tr) const = 0;
};

/// "reason:" + action token; reasonings that name no template map to kReasonOther.
inline constexpr std::string_view kReasonPrefix = "reason:";
inline constexpr std::string_view kReasonOther = "reason:other";

std::string reasoning_text(std::string_view action_text, std::string_view goal_phrase);

/// The action named inside a template rationale ("I should X because ..."),
/// or nullopt for free-form text.
std::optional<std::string> reasoning_action(std::string_view reasoning);

/// Lexicon for a registered environment id; ConfigError otherwise.
std::shared_ptr<const Lexicon> make_lexicon(std::string_view env_id);

namespace treasuregrid {
std::shared_ptr<const Lexicon> make_lexicon();
}
namespace minishop {
std::shared_ptr<const Lexicon> make_lexicon();
}

}  // namespace trajloop
