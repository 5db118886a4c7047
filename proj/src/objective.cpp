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

#include "trajloop/objective.hpp"

#include <cmath>
#include <sstream>

#include "trajloop/errors.hpp"
#include "trajloop/hash.hpp"
#include "trajloop/io.hpp"

namespace trajloop {

void ShapingPolicy::validate() const {
  if (!(success_threshold > 0.0 && success_threshold <= 1.0)) {
    throw ConfigError("success_threshold must be in (0, 1]");
  }
  if (mode == Mode::FixedSmall && !(fixed_value > 0.0 && fixed_value < 1.0)) {
    throw ConfigError("FixedSmall value must be in (0, 1)");
  }
  if (failure_weight_override && !std::isfinite(*failure_weight_override)) {
    throw ConfigError("failure weight override must be finite");
  }
}

std::string_view to_string(ShapingPolicy::Mode m) noexcept {
  switch (m) {
    case ShapingPolicy::Mode::BinarizedMinusOne: return "binarized";
    case ShapingPolicy::Mode::OriginalReward: return "original";
    case ShapingPolicy::Mode::FixedSmall: return "fixed_small";
    case ShapingPolicy::Mode::SupervisedOnly: return "supervised";
  }
  return "?";
}

ShapingPolicy::Mode parse_shaping_mode(std::string_view s) {
  if (s == "binarized") return ShapingPolicy::Mode::BinarizedMinusOne;
  if (s == "original") return ShapingPolicy::Mode::OriginalReward;
  if (s == "fixed_small") return ShapingPolicy::Mode::FixedSmall;
  if (s == "supervised") return ShapingPolicy::Mode::SupervisedOnly;
  throw ConfigError("unknown shaping mode '" + std::string(s) +
                    "' (binarized, original, fixed_small, supervised)");
}

std::string_view to_string(DatasetSegmentKind k) noexcept {
  switch (k) {
    case DatasetSegmentKind::Label: return "Label";
    case DatasetSegmentKind::Observation: return "Observation";
    case DatasetSegmentKind::Reasoning: return "Reasoning";
    case DatasetSegmentKind::Action: return "Action";
  }
  return "?";
}

std::vector<DatasetSegment> segments_of(const Transcript& tr) {
  std::vector<DatasetSegment> out;
  if (tr.label) out.push_back({DatasetSegmentKind::Label, *tr.label});
  for (const auto& s : tr.steps) {
    out.push_back({DatasetSegmentKind::Observation, s.observation});
    if (s.reasoning) out.push_back({DatasetSegmentKind::Reasoning, *s.reasoning});
    if (s.action) out.push_back({DatasetSegmentKind::Action, *s.action});
  }
  return out;
}

ShapedSet shape_rewards(const TaskGroups& groups, const ShapingPolicy& policy) {
  policy.validate();
  using Mode = ShapingPolicy::Mode;
  ShapedSet out;
  for (const auto& [task, trajs] : groups) {
    std::size_t successes = 0, failures = 0;
    for (const auto& t : trajs) {
      (t.terminal_reward >= policy.success_threshold ? successes : failures) += 1;
    }
    if (failures > 0 && successes == 0) {
      throw UsageError("task " + task + " has failed trajectories but no success to pair them with");
    }
    if (policy.mode == Mode::BinarizedMinusOne && !policy.label_condition && failures > 0 &&
        successes == 1) {
      out.warnings.push_back("task " + task +
                             ": K=1 with weight -1 leaves only the contrastive term; expect "
                             "training instability");
    }
    for (const auto& t : trajs) {
      const bool ok = t.terminal_reward >= policy.success_threshold;
      WeightedExample ex;
      ex.task_id = t.task_id;
      ex.trajectory_ref = t.task_id + "@" + std::to_string(t.round) + "/" + hex64(t.seed);
      ex.transcript = transcript_of(t);
      if (policy.label_condition) {
        ex.weight = 1.0;
        ex.transcript.label = ok ? "Success" : "Fail";
      } else if (ok) {
        ex.weight = 1.0;
      } else {
        switch (policy.mode) {
          case Mode::SupervisedOnly: continue;
          case Mode::BinarizedMinusOne: ex.weight = policy.failure_weight_override.value_or(-1.0); break;
          case Mode::OriginalReward:
            ex.weight = policy.failure_weight_override.value_or(t.terminal_reward);
            break;
          case Mode::FixedSmall: ex.weight = policy.fixed_value; break;
        }
      }
      ex.segments = segments_of(ex.transcript);
      out.examples.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<double> ObjectiveDecomposition::recombined_weights() const {
  std::vector<double> w(static_cast<std::size_t>(K), sft_success + contrast);
  w.push_back(sft_fail - static_cast<double>(K) * contrast);
  return w;
}

ObjectiveDecomposition decompose(int K, double r_f) {
  if (K < 1) throw DomainError("K must be >= 1, got " + std::to_string(K));
  if (!std::isfinite(r_f)) throw DomainError("r_f must be finite");
  ObjectiveDecomposition d;
  d.K = K;
  d.r_f = r_f;
  const double k = static_cast<double>(K);
  d.sft_success = 1.0 - (1.0 - r_f) / (2.0 * k);
  d.sft_fail = (1.0 + r_f) / 2.0;
  d.contrast = (1.0 - r_f) / (2.0 * k);
  d.pure_sft = r_f == 0.0;
  d.fail_term_zero = r_f == -1.0;
  d.contrast_only = r_f == -1.0 && K == 1;
  if (d.contrast_only) {
    d.warnings.emplace_back(
        "K=1 with r_f=-1 zeroes the supervised terms; the contrastive term alone causes training "
        "instability");
  }
  return d;
}

std::vector<EncodedExample> encode_examples(const ToyModel& model, const ToyPolicyParams& p,
                                            const std::vector<WeightedExample>& examples) {
  std::vector<EncodedExample> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.weight == 0.0) continue;
    try {
      out.push_back({ex.weight, model.encode(p, ex.transcript)});
    } catch (const DomainError& e) {
      throw DomainError("example " + std::to_string(i) + " (" + ex.trajectory_ref + "): " + e.what());
    }
  }
  return out;
}

ObjectiveResult objective_value_and_grad(const ToyPolicyParams& p,
                                         const std::vector<EncodedExample>& examples,
                                         const ObjectiveOptions& opts) {
  ObjectiveResult r;
  r.grad.assign(p.weights.size(), 0.0);
  if (examples.empty()) return r;
  const double inv_m = 1.0 / static_cast<double>(examples.size());
  for (const auto& ex : examples) {
    const double scale = ex.weight * inv_m;
    const bool world = opts.include_world_model && (opts.negative_world_model || ex.weight >= 0.0);
    double sum = 0.0;
    for (const auto& seg : ex.segments) {
      if (seg.kind == SegmentKind::Observation && !world) continue;
      sum += accumulate_grad_logprob(p, seg.context, seg.token, scale, r.grad);
    }
    r.value += scale * sum;
  }
  return r;
}

ObjectiveResult objective_value_and_grad(const ToyModel& model, const ToyPolicyParams& p,
                                         const std::vector<WeightedExample>& examples,
                                         const ObjectiveOptions& opts) {
  return objective_value_and_grad(p, encode_examples(model, p, examples), opts);
}

nlohmann::ordered_json stats_to_json(const DatasetStats& s) {
  nlohmann::ordered_json j;
  j["total_sequences"] = s.total_sequences;
  j["failed_sequences"] = s.failed_sequences;
  j["failed_ratio"] = s.failed_ratio;
  j["total_segments"] = s.total_segments;
  j["failed_segments"] = s.failed_segments;
  return j;
}

DatasetStats stats_from_json(const nlohmann::json& j) {
  DatasetStats s;
  s.total_sequences = j.at("total_sequences").get<std::size_t>();
  s.failed_sequences = j.at("failed_sequences").get<std::size_t>();
  s.failed_ratio = j.at("failed_ratio").get<double>();
  s.total_segments = j.value("total_segments", std::size_t{0});
  s.failed_segments = j.value("failed_segments", std::size_t{0});
  return s;
}

namespace {

void count(DatasetStats& s, bool failed, std::size_t segments) {
  ++s.total_sequences;
  s.total_segments += segments;
  if (failed) {
    ++s.failed_sequences;
    s.failed_segments += segments;
  }
}

void finalize(DatasetStats& s) {
  s.failed_ratio = s.total_sequences == 0
                       ? 0.0
                       : static_cast<double>(s.failed_sequences) / static_cast<double>(s.total_sequences);
}

}  // namespace

DatasetStats emit_dataset(const std::vector<WeightedExample>& examples,
                          const std::filesystem::path& path) {
  DatasetStats s;
  std::ostringstream out;
  for (const auto& ex : examples) {
    nlohmann::ordered_json rec;
    rec["task_id"] = ex.task_id;
    rec["weight"] = ex.weight;
    auto segs = nlohmann::ordered_json::array();
    for (const auto& seg : ex.segments) {
      nlohmann::ordered_json js;
      js["kind"] = to_string(seg.kind);
      js["text"] = seg.text;
      segs.push_back(std::move(js));
    }
    rec["segments"] = std::move(segs);
    out << rec.dump() << '\n';
    count(s, ex.weight < 1.0 || ex.transcript.label == "Fail", ex.segments.size());
  }
  finalize(s);
  write_file_atomic(path.string(), out.str());
  return s;
}

DatasetStats dataset_stats(const std::filesystem::path& path) {
  DatasetStats s;
  for (const auto& line : read_lines(path.string())) {
    const auto rec = nlohmann::json::parse(line);
    const auto& segs = rec.at("segments");
    bool fail_label = false;
    for (const auto& seg : segs) {
      fail_label = fail_label || (seg.at("kind") == "Label" && seg.at("text") == "Fail");
    }
    count(s, rec.at("weight").get<double>() < 1.0 || fail_label, segs.size());
  }
  finalize(s);
  return s;
}

TrainerConfig::Optimizer parse_optimizer(std::string_view s) {
  if (s == "gradient_ascent") return TrainerConfig::Optimizer::GradientAscent;
  if (s == "adam") return TrainerConfig::Optimizer::Adam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "' (gradient_ascent, adam)");
}

std::string_view to_string(TrainerConfig::Optimizer o) noexcept {
  return o == TrainerConfig::Optimizer::Adam ? "adam" : "gradient_ascent";
}

TrainResult train_toy(const ToyModel& model, ToyPolicyParams params,
                      const std::vector<WeightedExample>& examples, const TrainerConfig& cfg) {
  if (examples.empty()) throw DomainError("empty training dataset");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  const auto encoded = encode_examples(model, params, examples);
  TrainResult r;
  const bool adam = cfg.optimizer == TrainerConfig::Optimizer::Adam;
  std::vector<double> m, v;
  if (adam) {
    m.assign(params.weights.size(), 0.0);
    v.assign(params.weights.size(), 0.0);
  }
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto obj = objective_value_and_grad(params, encoded, cfg.objective);
    if (!std::isfinite(obj.value)) {
      throw Error("training diverged at epoch " + std::to_string(epoch + 1) + ": J is not finite");
    }
    r.objective_per_epoch.push_back(obj.value);
    if (adam) {
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, epoch + 1);
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, epoch + 1);
      for (std::size_t i = 0; i < params.weights.size(); ++i) {
        const double g = obj.grad[i];
        if (g == 0.0 && m[i] == 0.0) continue;
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
        params.weights[i] += cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_epsilon);
      }
    } else {
      for (std::size_t i = 0; i < params.weights.size(); ++i) {
        params.weights[i] += cfg.learning_rate * obj.grad[i];
      }
    }
    if (!params.finite()) {
      throw Error("training diverged at epoch " + std::to_string(epoch + 1) + ": weights not finite");
    }
  }
  r.params = std::move(params);
  return r;
}

}  // namespace trajloop
