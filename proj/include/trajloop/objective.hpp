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

// Reward shaping, the weighted log-likelihood objective, its three-term
// decomposition, dataset export and the toy trainer.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trajloop/composer.hpp"
#include "trajloop/toy_policy.hpp"
#include "trajloop/trajectory.hpp"
#include "trajloop/transcript.hpp"

namespace trajloop {

struct ShapingPolicy {
  enum class Mode { BinarizedMinusOne, OriginalReward, FixedSmall, SupervisedOnly };
  Mode mode = Mode::BinarizedMinusOne;
  double fixed_value = 0.1;
  double success_threshold = 1.0;
  bool label_condition = false;
  /// Replaces the failure weight of BinarizedMinusOne / OriginalReward.
  std::optional<double> failure_weight_override;
  /// Keep observation terms of negatively weighted trajectories.
  bool negative_world_model = true;

  void validate() const;
};

std::string_view to_string(ShapingPolicy::Mode m) noexcept;
ShapingPolicy::Mode parse_shaping_mode(std::string_view s);

/// Label header segments only appear under label conditioning.
enum class DatasetSegmentKind { Label, Observation, Reasoning, Action };
std::string_view to_string(DatasetSegmentKind k) noexcept;

struct DatasetSegment {
  DatasetSegmentKind kind;
  std::string text;
  bool operator==(const DatasetSegment&) const = default;
};

struct WeightedExample {
  std::string task_id;
  std::string trajectory_ref;  // "<task_id>@<round>/<seed hex>"
  double weight = 1.0;
  Transcript transcript;       // carries the label under label conditioning
  std::vector<DatasetSegment> segments;
};

struct ShapedSet {
  std::vector<WeightedExample> examples;
  std::vector<std::string> warnings;
};

/// Groups must already satisfy the pairing guarantee; a group with a
/// failure but no success raises UsageError.
ShapedSet shape_rewards(const TaskGroups& groups, const ShapingPolicy& policy);

std::vector<DatasetSegment> segments_of(const Transcript& tr);

struct ObjectiveDecomposition {
  int K = 1;
  double r_f = 0.0;
  double sft_success = 0.0;
  double sft_fail = 0.0;
  double contrast = 0.0;
  bool pure_sft = false;        // r_f = 0
  bool fail_term_zero = false;  // r_f = -1
  bool contrast_only = false;   // r_f = -1 and K = 1
  std::vector<std::string> warnings;

  /// Per-trajectory weights implied by the three terms: K successes, then the failure.
  std::vector<double> recombined_weights() const;
};

ObjectiveDecomposition decompose(int K, double r_f);

struct ObjectiveOptions {
  bool include_world_model = true;
  bool negative_world_model = true;
};

struct EncodedExample {
  double weight = 0.0;
  std::vector<EncodedSegment> segments;
};

/// Examples with zero weight are dropped; M counts the rest.
std::vector<EncodedExample> encode_examples(const ToyModel& model, const ToyPolicyParams& p,
                                            const std::vector<WeightedExample>& examples);

struct ObjectiveResult {
  double value = 0.0;
  std::vector<double> grad;
};

ObjectiveResult objective_value_and_grad(const ToyPolicyParams& p,
                                         const std::vector<EncodedExample>& examples,
                                         const ObjectiveOptions& opts);
ObjectiveResult objective_value_and_grad(const ToyModel& model, const ToyPolicyParams& p,
                                         const std::vector<WeightedExample>& examples,
                                         const ObjectiveOptions& opts);

struct DatasetStats {
  std::size_t total_sequences = 0;
  std::size_t failed_sequences = 0;
  double failed_ratio = 0.0;
  std::size_t total_segments = 0;
  std::size_t failed_segments = 0;
  bool operator==(const DatasetStats&) const = default;
};

nlohmann::ordered_json stats_to_json(const DatasetStats& s);
DatasetStats stats_from_json(const nlohmann::json& j);

/// Writes one JSONL record per example and returns the statistics. A record
/// counts as failed when its weight is below 1 or its label is "Fail".
DatasetStats emit_dataset(const std::vector<WeightedExample>& examples,
                          const std::filesystem::path& path);
/// Statistics recomputed from an emitted file.
DatasetStats dataset_stats(const std::filesystem::path& path);

struct TrainerConfig {
  enum class Optimizer { GradientAscent, Adam };
  int epochs = 10;
  double learning_rate = 0.1;
  Optimizer optimizer = Optimizer::GradientAscent;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  ObjectiveOptions objective;
};

TrainerConfig::Optimizer parse_optimizer(std::string_view s);
std::string_view to_string(TrainerConfig::Optimizer o) noexcept;

struct TrainResult {
  ToyPolicyParams params;
  std::vector<double> objective_per_epoch;  // J before each update
};

/// Full-batch ascent on J, either plain gradient steps or Adam steps on the
/// same gradient. Throws DomainError on an empty dataset and
/// Error when J or the weights stop being finite.
TrainResult train_toy(const ToyModel& model, ToyPolicyParams params,
                      const std::vector<WeightedExample>& examples, const TrainerConfig& cfg);

}  // namespace trajloop
