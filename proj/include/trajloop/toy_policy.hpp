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

// Toy trainable policy: a linear softmax over template tokens with hashed
// context features. Weights are stored feature-major: weights[f * V + v].

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trajloop/backend.hpp"
#include "trajloop/hash.hpp"
#include "trajloop/lexicon.hpp"
#include "trajloop/transcript.hpp"

namespace trajloop {

struct ToyPolicyParams {
  std::vector<std::string> vocabulary;
  unsigned feature_bits = 14;
  std::vector<double> weights;

  static ToyPolicyParams zeros(std::vector<std::string> vocabulary, unsigned feature_bits);

  std::size_t width() const noexcept { return std::size_t{1} << feature_bits; }
  std::size_t vocab_size() const noexcept { return vocabulary.size(); }
  /// Throws DomainError for tokens outside the vocabulary.
  std::size_t token_index(std::string_view token) const;
  double& at(std::size_t feature, std::size_t token) { return weights[feature * vocab_size() + token]; }
  double at(std::size_t feature, std::size_t token) const {
    return weights[feature * vocab_size() + token];
  }
  bool finite() const noexcept;

  bool operator==(const ToyPolicyParams&) const = default;
};

/// Active feature slots; repeats count twice.
struct ToyContext {
  std::vector<std::uint32_t> features;
};

std::uint32_t feature_slot(const ToyPolicyParams& p, std::string_view feature);
ToyContext make_context(const ToyPolicyParams& p, const std::vector<std::string>& features);

std::vector<double> toy_scores(const ToyPolicyParams& p, const ToyContext& ctx);
double toy_logprob(const ToyPolicyParams& p, const ToyContext& ctx, std::size_t token);
double toy_logprob(const ToyPolicyParams& p, const ToyContext& ctx, std::string_view token);

/// Dense gradient of toy_logprob with respect to every weight.
std::vector<double> toy_grad_logprob(const ToyPolicyParams& p, const ToyContext& ctx,
                                     std::size_t token);

/// grad += scale * d/dw log p(token | ctx); returns log p(token | ctx).
double accumulate_grad_logprob(const ToyPolicyParams& p, const ToyContext& ctx, std::size_t token,
                               double scale, std::vector<double>& grad);

/// Picks one of `candidates`: argmax (lowest index wins ties) at temperature
/// 0, otherwise a draw from the tempered softmax restricted to them.
std::size_t toy_decode(const ToyPolicyParams& p, const ToyContext& ctx,
                       const std::vector<std::size_t>& candidates, double temperature, Rng& rng);

nlohmann::json params_to_json(const ToyPolicyParams& p);
ToyPolicyParams params_from_json(const nlohmann::json& j);

enum class SegmentKind { Observation, Reasoning, Action };
std::string_view to_string(SegmentKind k) noexcept;
SegmentKind parse_segment_kind(std::string_view s);

struct EncodedSegment {
  SegmentKind kind;
  ToyContext context;
  std::size_t token;
};

struct ToyModelConfig {
  unsigned feature_bits = 14;
  double reason_prior = 3.0;  // initial pull of an action towards its stated reason
};

/// Binds a lexicon to the policy's vocabulary and context features. The same
/// contexts are used for generation and for training.
class ToyModel {
 public:
  ToyModel(std::shared_ptr<const Lexicon> lexicon, ToyModelConfig config = {});

  const Lexicon& lexicon() const noexcept { return *lexicon_; }
  const ToyModelConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const std::vector<std::size_t>& reasoning_candidates() const noexcept { return reason_ids_; }
  const std::vector<std::size_t>& action_candidates() const noexcept { return action_ids_; }

  ToyPolicyParams initial_params() const;
  /// initial_params() plus the lexicon's prior rules scaled by `strength`.
  ToyPolicyParams prior_params(double strength) const;

  /// Segments in rendering order (o_1, RS_1, EA_1, o_2, ...). Throws
  /// DomainError naming the first segment with no template token.
  std::vector<EncodedSegment> encode(const ToyPolicyParams& p, const Transcript& tr) const;

  /// Contexts for the reasoning / action at step t of an analysed transcript.
  ToyContext reasoning_context(const ToyPolicyParams& p, const std::vector<StepAnalysis>& a,
                               std::size_t t, const std::optional<std::string>& label) const;
  ToyContext action_context(const ToyPolicyParams& p, const std::vector<StepAnalysis>& a,
                            std::size_t t, std::string_view reason_token,
                            const std::optional<std::string>& label) const;
  ToyContext observation_context(const ToyPolicyParams& p, const std::vector<StepAnalysis>& a,
                                 std::size_t t, const std::optional<std::string>& label) const;

 private:
  std::shared_ptr<const Lexicon> lexicon_;
  ToyModelConfig config_;
  std::vector<std::string> vocabulary_;
  std::vector<std::size_t> reason_ids_, action_ids_;
};

/// Serves ReAct and ActRe prompts from a ToyModel. ActRe rationales are
/// template sentences; no learning is involved on that side.
class ToyBackend final : public Backend {
 public:
  ToyBackend(std::shared_ptr<const ToyModel> model, std::shared_ptr<const ToyPolicyParams> params);
  std::string name() const override { return "toy"; }
  std::string complete(const CompletionRequest& request) override;

  const ToyPolicyParams& params() const noexcept { return *params_; }

 private:
  std::shared_ptr<const ToyModel> model_;
  std::shared_ptr<const ToyPolicyParams> params_;
};

}  // namespace trajloop
