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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "trajloop/trajectory.hpp"

namespace trajloop {

struct RoundManifest {
  int round = 0;
  std::vector<std::string> tasks_attempted;
  std::size_t trajectories_added = 0;
  std::string config_hash;
  std::uint64_t seed = 0;

  bool operator==(const RoundManifest&) const = default;
};

/// Append-only accumulated trajectory set.
///
/// Appends are serialized through one writer lock; readers take a shared lock
/// and always observe whole trajectories. Entries are never modified.
class TrajectoryStore {
 public:
  TrajectoryStore() = default;
  TrajectoryStore(const TrajectoryStore& other);
  TrajectoryStore& operator=(const TrajectoryStore& other);

  /// Validates `t` and appends it. `t.round` may not exceed current_round().
  void append(Trajectory t);

  /// Starts round `k` (must be current_round() + 1, or 0 for an empty store).
  void begin_round(int k);
  void set_manifest(RoundManifest m);

  int current_round() const;
  std::size_t size() const;
  std::vector<Trajectory> entries() const;
  std::vector<Trajectory> entries_for_round(int round) const;
  std::vector<RoundManifest> manifests() const;

  /// Task id -> trajectories with round <= up_to_round, in insertion order.
  std::map<std::string, std::vector<Trajectory>> group_by_task(int up_to_round) const;

  /// Max terminal reward over the task's trajectories up to `up_to_round`;
  /// nullopt means "no attempts".
  std::optional<double> best_accumulated_reward(const std::string& task_id,
                                                int up_to_round) const;

  /// round_<k>.traj.jsonl / round_<k>.manifest.json for every round, into `dir`.
  void save_round(const std::filesystem::path& dir, int round) const;

  /// Loads round files 0..N from `dirs` (one directory per round, in order).
  static TrajectoryStore load(const std::vector<std::filesystem::path>& round_dirs);

 private:
  mutable std::shared_mutex mu_;
  std::vector<Trajectory> entries_;
  std::vector<RoundManifest> manifests_;
  int current_round_ = -1;
};

std::string round_traj_filename(int round);
std::string round_manifest_filename(int round);

std::string manifest_to_json(const RoundManifest& m);
RoundManifest manifest_from_json(std::string_view text);

/// Whole-file JSONL helpers.
void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& ts);
std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);

}  // namespace trajloop
