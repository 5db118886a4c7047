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

#include "trajloop/store.hpp"

#include <algorithm>
#include <json.hpp>

#include "trajloop/errors.hpp"
#include "trajloop/io.hpp"

namespace trajloop {

using ojson = nlohmann::ordered_json;

std::string round_traj_filename(int round) {
  return "round_" + std::to_string(round) + ".traj.jsonl";
}

std::string round_manifest_filename(int round) {
  return "round_" + std::to_string(round) + ".manifest.json";
}

TrajectoryStore::TrajectoryStore(const TrajectoryStore& other) {
  std::shared_lock lock(other.mu_);
  entries_ = other.entries_;
  manifests_ = other.manifests_;
  current_round_ = other.current_round_;
}

TrajectoryStore& TrajectoryStore::operator=(const TrajectoryStore& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  entries_ = other.entries_;
  manifests_ = other.manifests_;
  current_round_ = other.current_round_;
  return *this;
}

void TrajectoryStore::append(Trajectory t) {
  validate(t);
  std::unique_lock lock(mu_);
  if (current_round_ < 0) throw UsageError("append before begin_round");
  if (t.round > current_round_) {
    throw InvariantError("trajectory round " + std::to_string(t.round) +
                         " exceeds current round " + std::to_string(current_round_));
  }
  entries_.push_back(std::move(t));
}

void TrajectoryStore::begin_round(int k) {
  std::unique_lock lock(mu_);
  if (k != current_round_ + 1) {
    throw UsageError("begin_round(" + std::to_string(k) + ") after round " +
                     std::to_string(current_round_));
  }
  current_round_ = k;
}

void TrajectoryStore::set_manifest(RoundManifest m) {
  std::unique_lock lock(mu_);
  if (m.round > current_round_) throw UsageError("manifest for a round not yet started");
  auto it = std::find_if(manifests_.begin(), manifests_.end(),
                         [&](const RoundManifest& x) { return x.round == m.round; });
  if (it != manifests_.end()) {
    *it = std::move(m);
  } else {
    manifests_.push_back(std::move(m));
  }
}

int TrajectoryStore::current_round() const {
  std::shared_lock lock(mu_);
  return current_round_;
}

std::size_t TrajectoryStore::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<Trajectory> TrajectoryStore::entries() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::vector<Trajectory> TrajectoryStore::entries_for_round(int round) const {
  std::shared_lock lock(mu_);
  std::vector<Trajectory> out;
  for (const auto& t : entries_) {
    if (t.round == round) out.push_back(t);
  }
  return out;
}

std::vector<RoundManifest> TrajectoryStore::manifests() const {
  std::shared_lock lock(mu_);
  return manifests_;
}

std::map<std::string, std::vector<Trajectory>> TrajectoryStore::group_by_task(
    int up_to_round) const {
  std::shared_lock lock(mu_);
  std::map<std::string, std::vector<Trajectory>> groups;
  for (const auto& t : entries_) {
    if (t.round <= up_to_round) groups[t.task_id].push_back(t);
  }
  return groups;
}

std::optional<double> TrajectoryStore::best_accumulated_reward(const std::string& task_id,
                                                               int up_to_round) const {
  std::shared_lock lock(mu_);
  std::optional<double> best;
  for (const auto& t : entries_) {
    if (t.task_id != task_id || t.round > up_to_round) continue;
    if (!best || t.terminal_reward > *best) best = t.terminal_reward;
  }
  return best;
}

std::string manifest_to_json(const RoundManifest& m) {
  ojson j;
  j["round"] = m.round;
  j["tasks_attempted"] = m.tasks_attempted;
  j["trajectories_added"] = m.trajectories_added;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  return j.dump(2) + "\n";
}

RoundManifest manifest_from_json(std::string_view text) {
  try {
    const auto j = ojson::parse(text);
    RoundManifest m;
    m.round = j.at("round").get<int>();
    m.tasks_attempted = j.at("tasks_attempted").get<std::vector<std::string>>();
    m.trajectories_added = j.at("trajectories_added").get<std::size_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
}

void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& ts) {
  std::string out;
  for (const auto& t : ts) {
    out += serialize_trajectory(t);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
  std::vector<Trajectory> ts;
  for (const auto& line : read_lines(path)) ts.push_back(deserialize_trajectory(line));
  return ts;
}

void TrajectoryStore::save_round(const std::filesystem::path& dir, int round) const {
  write_trajectories(dir / round_traj_filename(round), entries_for_round(round));
  std::shared_lock lock(mu_);
  for (const auto& m : manifests_) {
    if (m.round == round) write_file_atomic(dir / round_manifest_filename(round), manifest_to_json(m));
  }
}

TrajectoryStore TrajectoryStore::load(const std::vector<std::filesystem::path>& round_dirs) {
  TrajectoryStore store;
  for (std::size_t k = 0; k < round_dirs.size(); ++k) {
    const int round = static_cast<int>(k);
    store.begin_round(round);
    for (auto& t : read_trajectories(round_dirs[k] / round_traj_filename(round))) {
      if (t.round != round) throw InvariantError("round file contains a foreign round");
      store.append(std::move(t));
    }
    const auto mpath = round_dirs[k] / round_manifest_filename(round);
    if (std::filesystem::exists(mpath)) store.set_manifest(manifest_from_json(read_file(mpath)));
  }
  return store;
}

}  // namespace trajloop
