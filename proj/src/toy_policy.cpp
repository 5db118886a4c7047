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

#include "trajloop/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trajloop/errors.hpp"

namespace trajloop {

namespace {

double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void check_token(const ToyPolicyParams& p, std::size_t token) {
  if (token >= p.vocab_size()) {
    throw DomainError("token index " + std::to_string(token) + " outside the vocabulary");
  }
}

const std::string kActPrefix = "act:";
const std::string kObsPrefix = "obs:";

}  // namespace

ToyPolicyParams ToyPolicyParams::zeros(std::vector<std::string> vocabulary, unsigned feature_bits) {
  if (vocabulary.empty()) throw DomainError("empty vocabulary");
  if (feature_bits < 1 || feature_bits > 24) throw DomainError("feature_bits must be in [1, 24]");
  ToyPolicyParams p;
  p.vocabulary = std::move(vocabulary);
  p.feature_bits = feature_bits;
  p.weights.assign(p.width() * p.vocab_size(), 0.0);
  return p;
}

std::size_t ToyPolicyParams::token_index(std::string_view token) const {
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == token) return i;
  }
  throw DomainError("unknown token '" + std::string(token) + "'");
}

bool ToyPolicyParams::finite() const noexcept {
  return std::all_of(weights.begin(), weights.end(), [](double w) { return std::isfinite(w); });
}

std::uint32_t feature_slot(const ToyPolicyParams& p, std::string_view feature) {
  return static_cast<std::uint32_t>(fnv1a64(feature) & (p.width() - 1));
}

ToyContext make_context(const ToyPolicyParams& p, const std::vector<std::string>& features) {
  ToyContext c;
  c.features.reserve(features.size());
  for (const auto& f : features) c.features.push_back(feature_slot(p, f));
  return c;
}

std::vector<double> toy_scores(const ToyPolicyParams& p, const ToyContext& ctx) {
  const std::size_t v = p.vocab_size();
  std::vector<double> s(v, 0.0);
  for (auto f : ctx.features) {
    const double* row = p.weights.data() + static_cast<std::size_t>(f) * v;
    for (std::size_t i = 0; i < v; ++i) s[i] += row[i];
  }
  return s;
}

double toy_logprob(const ToyPolicyParams& p, const ToyContext& ctx, std::size_t token) {
  check_token(p, token);
  const auto s = toy_scores(p, ctx);
  return s[token] - log_sum_exp(s);
}

double toy_logprob(const ToyPolicyParams& p, const ToyContext& ctx, std::string_view token) {
  return toy_logprob(p, ctx, p.token_index(token));
}

double accumulate_grad_logprob(const ToyPolicyParams& p, const ToyContext& ctx, std::size_t token,
                               double scale, std::vector<double>& grad) {
  check_token(p, token);
  const std::size_t v = p.vocab_size();
  auto s = toy_scores(p, ctx);
  const double lse = log_sum_exp(s);
  const double lp = s[token] - lse;
  for (auto& x : s) x = std::exp(x - lse);  // probabilities
  for (auto f : ctx.features) {
    double* row = grad.data() + static_cast<std::size_t>(f) * v;
    for (std::size_t i = 0; i < v; ++i) row[i] -= scale * s[i];
    row[token] += scale;
  }
  return lp;
}

std::vector<double> toy_grad_logprob(const ToyPolicyParams& p, const ToyContext& ctx,
                                     std::size_t token) {
  std::vector<double> g(p.weights.size(), 0.0);
  accumulate_grad_logprob(p, ctx, token, 1.0, g);
  return g;
}

std::size_t toy_decode(const ToyPolicyParams& p, const ToyContext& ctx,
                       const std::vector<std::size_t>& candidates, double temperature, Rng& rng) {
  if (candidates.empty()) throw DomainError("no candidate tokens");
  const auto s = toy_scores(p, ctx);
  if (temperature <= 0.0) {
    std::size_t best = candidates.front();
    for (auto c : candidates) {
      if (s[c] > s[best] || (s[c] == s[best] && c < best)) best = c;
    }
    return best;
  }
  std::vector<double> z;
  z.reserve(candidates.size());
  for (auto c : candidates) z.push_back(s[c] / temperature);
  const double lse = log_sum_exp(z);
  double u = rng.uniform();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    u -= std::exp(z[i] - lse);
    if (u < 0.0) return candidates[i];
  }
  return candidates.back();
}

nlohmann::json params_to_json(const ToyPolicyParams& p) {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    if (p.weights[i] != 0.0) w.push_back({i, p.weights[i]});
  }
  nlohmann::json j;
  j["vocabulary"] = p.vocabulary;
  j["feature_bits"] = p.feature_bits;
  j["weights"] = std::move(w);
  return j;
}

ToyPolicyParams params_from_json(const nlohmann::json& j) {
  auto p = ToyPolicyParams::zeros(j.at("vocabulary").get<std::vector<std::string>>(),
                                  j.at("feature_bits").get<unsigned>());
  for (const auto& e : j.at("weights")) {
    const auto i = e.at(0).get<std::size_t>();
    if (i >= p.weights.size()) throw ConfigError("weight index out of range");
    p.weights[i] = e.at(1).get<double>();
  }
  if (!p.finite()) throw ConfigError("non-finite weights");
  return p;
}

std::string_view to_string(SegmentKind k) noexcept {
  switch (k) {
    case SegmentKind::Observation: return "Observation";
    case SegmentKind::Reasoning: return "Reasoning";
    case SegmentKind::Action: return "Action";
  }
  return "?";
}

SegmentKind parse_segment_kind(std::string_view s) {
  if (s == "Observation") return SegmentKind::Observation;
  if (s == "Reasoning") return SegmentKind::Reasoning;
  if (s == "Action") return SegmentKind::Action;
  throw InvariantError("unknown segment kind '" + std::string(s) + "'");
}

ToyModel::ToyModel(std::shared_ptr<const Lexicon> lexicon, ToyModelConfig config)
    : lexicon_(std::move(lexicon)), config_(config) {
  for (const auto& a : lexicon_->action_tokens()) {
    reason_ids_.push_back(vocabulary_.size());
    vocabulary_.push_back(std::string(kReasonPrefix) + a);
  }
  vocabulary_.emplace_back(kReasonOther);
  for (const auto& a : lexicon_->action_tokens()) {
    action_ids_.push_back(vocabulary_.size());
    vocabulary_.push_back(kActPrefix + a);
  }
  for (const auto& o : lexicon_->observation_tokens()) vocabulary_.push_back(kObsPrefix + o);
}

ToyPolicyParams ToyModel::initial_params() const {
  auto p = ToyPolicyParams::zeros(vocabulary_, config_.feature_bits);
  for (const auto& a : lexicon_->action_tokens()) {
    const auto f = feature_slot(p, "A|reason=" + std::string(kReasonPrefix) + a);
    p.at(f, p.token_index(kActPrefix + a)) += config_.reason_prior;
  }
  return p;
}

ToyPolicyParams ToyModel::prior_params(double strength) const {
  auto p = initial_params();
  for (const auto& r : lexicon_->prior_rules()) {
    const auto f = feature_slot(p, "R|" + r.feature);
    p.at(f, p.token_index(std::string(kReasonPrefix) + r.action_token)) += strength * r.weight;
  }
  return p;
}

namespace {

ToyContext slot_context(const ToyPolicyParams& p, std::string_view slot,
                        const std::vector<std::string>& base,
                        std::initializer_list<std::string> extra,
                        const std::optional<std::string>& label) {
  ToyContext c;
  auto add = [&](std::string_view f) {
    std::string s(slot);
    s += '|';
    s += f;
    c.features.push_back(feature_slot(p, s));
  };
  for (const auto& f : base) add(f);
  for (const auto& f : extra) add(f);
  add("bias");
  if (label) add("label=" + *label);
  return c;
}

}  // namespace

ToyContext ToyModel::reasoning_context(const ToyPolicyParams& p, const std::vector<StepAnalysis>& a,
                                       std::size_t t, const std::optional<std::string>& label) const {
  return slot_context(p, "R", a.at(t).features, {}, label);
}

ToyContext ToyModel::action_context(const ToyPolicyParams& p, const std::vector<StepAnalysis>& a,
                                    std::size_t t, std::string_view reason_token,
                                    const std::optional<std::string>& label) const {
  return slot_context(p, "A", a.at(t).features, {"reason=" + std::string(reason_token)}, label);
}

ToyContext ToyModel::observation_context(const ToyPolicyParams& p,
                                         const std::vector<StepAnalysis>& a, std::size_t t,
                                         const std::optional<std::string>& label) const {
  if (t == 0) return slot_context(p, "O", {}, {"start"}, label);
  auto base = a.at(t - 1).features;
  base.insert(base.end(), a.at(t - 1).text_features.begin(), a.at(t - 1).text_features.end());
  return slot_context(p, "O", base, {"act=" + a.at(t - 1).action_token.value_or("unknown")}, label);
}

std::vector<EncodedSegment> ToyModel::encode(const ToyPolicyParams& p, const Transcript& tr) const {
  const auto an = lexicon_->analyze(tr);
  std::vector<EncodedSegment> out;
  for (std::size_t t = 0; t < tr.steps.size(); ++t) {
    const auto& s = tr.steps[t];
    out.push_back({SegmentKind::Observation, observation_context(p, an, t, tr.label),
                   p.token_index(kObsPrefix + an[t].observation_token)});
    if (s.reasoning) {
      out.push_back({SegmentKind::Reasoning, reasoning_context(p, an, t, tr.label),
                     p.token_index(*an[t].reason_token)});
    }
    if (s.action) {
      if (!an[t].action_token) {
        throw DomainError("segment " + std::to_string(out.size()) + " (action at step " +
                          std::to_string(t + 1) + ": '" + *s.action +
                          "') has no token in the toy vocabulary");
      }
      out.push_back({SegmentKind::Action,
                     action_context(p, an, t, an[t].reason_token.value_or(std::string(kReasonOther)),
                                    tr.label),
                     p.token_index(kActPrefix + *an[t].action_token)});
    }
  }
  return out;
}

ToyBackend::ToyBackend(std::shared_ptr<const ToyModel> model,
                       std::shared_ptr<const ToyPolicyParams> params)
    : model_(std::move(model)), params_(std::move(params)) {
  if (params_->vocabulary != model_->vocabulary()) {
    throw ConfigError("toy parameters do not match the model vocabulary");
  }
}

std::string ToyBackend::complete(const CompletionRequest& request) {
  request.check();
  auto parsed = parse_prompt(request.prompt);
  if (!parsed) throw BackendError("toy backend: prompt has no recognised tail");
  const auto& lex = model_->lexicon();
  const auto& p = *params_;
  auto& tr = parsed->transcript;
  const std::size_t t = tr.steps.size() - 1;
  Rng rng(request.seed);
  const auto action_suffix = [&](std::size_t tok) {
    return tok - model_->action_candidates().front();
  };

  std::string out;
  switch (parsed->kind) {
    case PromptRequest::Kind::Reason: {
      out = " [" + reasoning_text(parsed->sampled_action, lex.goal_phrase(tr)) + "]";
      break;
    }
    case PromptRequest::Kind::Reasoning: {
      const auto an = lex.analyze(tr);
      const auto r = toy_decode(p, model_->reasoning_context(p, an, t, tr.label),
                                model_->reasoning_candidates(), request.temperature, rng);
      const auto& rendered = an[t].renderings.at(r - model_->reasoning_candidates().front());
      const auto a = toy_decode(p, model_->action_context(p, an, t, p.vocabulary[r], tr.label),
                                model_->action_candidates(), request.temperature, rng);
      out = reasoning_text(rendered, lex.goal_phrase(tr)) + "]\nAction: " +
            an[t].renderings.at(action_suffix(a));
      break;
    }
    case PromptRequest::Kind::Action: {
      tr.steps.back().reasoning = parsed->reasoning;
      const auto an = lex.analyze(tr);
      const auto a = toy_decode(p, model_->action_context(p, an, t, *an[t].reason_token, tr.label),
                                model_->action_candidates(), request.temperature, rng);
      out = " " + an[t].renderings.at(action_suffix(a));
      break;
    }
  }
  return truncate_at_stop(out, request.stop);
}

}  // namespace trajloop
