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

#include "trajloop/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "trajloop/agents.hpp"
#include "trajloop/errors.hpp"
#include "trajloop/hash.hpp"
#include "trajloop/http_backend.hpp"
#include "trajloop/io.hpp"
#include "trajloop/lexicon.hpp"
#include "trajloop/log.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace trajloop {

Metrics metrics_of(const std::vector<double>& rewards) {
  if (rewards.empty()) throw DomainError("metrics over an empty task set");
  Metrics m;
  m.tasks = rewards.size();
  double sum = 0.0;
  std::size_t ok = 0, ge75 = 0, ge50 = 0;
  for (double r : rewards) {
    sum += r;
    ok += r >= 1.0;
    ge75 += r >= 0.75;
    ge50 += r >= 0.5;
  }
  const double n = static_cast<double>(rewards.size());
  m.mean_reward = 100.0 * sum / n;
  m.success_rate = 100.0 * static_cast<double>(ok) / n;
  m.pct_reward_ge_075 = 100.0 * static_cast<double>(ge75) / n;
  m.pct_reward_ge_05 = 100.0 * static_cast<double>(ge50) / n;
  return m;
}

std::vector<double> best_rewards(const std::vector<TaskSpec>& tasks,
                                 const std::vector<std::vector<Trajectory>>& rollouts) {
  std::map<std::string, double> best;
  for (const auto& set : rollouts) {
    for (const auto& t : set) {
      auto [it, fresh] = best.emplace(t.task_id, t.terminal_reward);
      if (!fresh) it->second = std::max(it->second, t.terminal_reward);
    }
  }
  std::vector<double> out;
  out.reserve(tasks.size());
  for (const auto& task : tasks) {
    auto it = best.find(task.task_id);
    out.push_back(it == best.end() ? 0.0 : it->second);
  }
  return out;
}

Metrics evaluate_shots(const std::vector<TaskSpec>& tasks,
                       const std::vector<std::vector<Trajectory>>& per_round, int shots) {
  if (shots < 1) throw UsageError("shots must be >= 1");
  if (per_round.empty()) throw UsageError("no rollouts to evaluate");
  const std::size_t n = std::min(per_round.size(), static_cast<std::size_t>(shots));
  std::vector<std::vector<Trajectory>> last(per_round.end() - static_cast<std::ptrdiff_t>(n),
                                            per_round.end());
  return metrics_of(best_rewards(tasks, last));
}

ojson metrics_to_json(const Metrics& m) {
  ojson j;
  j["tasks"] = m.tasks;
  j["mean_reward"] = m.mean_reward;
  j["success_rate"] = m.success_rate;
  j["pct_reward_ge_075"] = m.pct_reward_ge_075;
  j["pct_reward_ge_05"] = m.pct_reward_ge_05;
  return j;
}

Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.tasks = j.at("tasks").get<std::size_t>();
  m.mean_reward = j.at("mean_reward").get<double>();
  m.success_rate = j.at("success_rate").get<double>();
  m.pct_reward_ge_075 = j.at("pct_reward_ge_075").get<double>();
  m.pct_reward_ge_05 = j.at("pct_reward_ge_05").get<double>();
  return m;
}

ojson report_to_json(const RoundReport& r) {
  ojson j;
  j["round"] = r.round;
  for (const auto& [split, m] : r.single_shot) j["single_shot"][std::string(to_string(split))] = metrics_to_json(m);
  for (const auto& [split, m] : r.accumulated) j["accumulated"][std::string(to_string(split))] = metrics_to_json(m);
  j["accumulated_success_by_type"] = ojson::object();
  for (const auto& [type, v] : r.accumulated_success_by_type) j["accumulated_success_by_type"][type] = v;
  j["dataset"] = r.dataset ? stats_to_json(*r.dataset) : ojson(nullptr);
  j["store_size"] = r.store_size;
  return j;
}

RoundReport report_from_json(const nlohmann::json& j) {
  RoundReport r;
  r.round = j.at("round").get<int>();
  for (const char* key : {"single_shot", "accumulated"}) {
    if (!j.contains(key)) continue;
    auto& dst = std::string_view(key) == "single_shot" ? r.single_shot : r.accumulated;
    for (const auto& [split, m] : j.at(key).items()) dst[parse_split(split)] = metrics_from_json(m);
  }
  for (const auto& [type, v] : j.at("accumulated_success_by_type").items()) {
    r.accumulated_success_by_type[type] = v.get<double>();
  }
  if (!j.at("dataset").is_null()) r.dataset = stats_from_json(j.at("dataset"));
  r.store_size = j.at("store_size").get<std::size_t>();
  return r;
}

namespace {

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

void metrics_table(std::ostringstream& os, const std::vector<RoundReport>& rounds, Split split,
                   bool accumulated) {
  os << "| Round | Reward R (×100) | Success Rate (%) | %{R ≥ 0.75} | %{R ≥ 0.5} |\n";
  os << "|---|---|---|---|---|\n";
  for (const auto& r : rounds) {
    const auto& src = accumulated ? r.accumulated : r.single_shot;
    auto it = src.find(split);
    if (it == src.end()) continue;
    const auto& m = it->second;
    os << "| " << r.round << " | " << fmt1(m.mean_reward) << " | " << fmt1(m.success_rate) << " | "
       << fmt1(m.pct_reward_ge_075) << " | " << fmt1(m.pct_reward_ge_05) << " |\n";
  }
}

}  // namespace

std::string render_report_markdown(const std::vector<RoundReport>& rounds, const std::string& env_id) {
  std::ostringstream os;
  os << "# Run report: " << env_id << "\n\n";

  std::set<std::string> types;
  for (const auto& r : rounds) {
    for (const auto& [t, v] : r.accumulated_success_by_type) types.insert(t);
  }
  os << "## Accumulated training set, success rate (%) by task type\n\n| Round |";
  for (const auto& t : types) os << ' ' << t << " |";
  os << " Total |\n|---|";
  for (std::size_t i = 0; i < types.size(); ++i) os << "---|";
  os << "---|\n";
  for (const auto& r : rounds) {
    os << "| " << r.round << " |";
    for (const auto& t : types) {
      auto it = r.accumulated_success_by_type.find(t);
      os << ' ' << (it == r.accumulated_success_by_type.end() ? "-" : fmt1(it->second)) << " |";
    }
    auto it = r.accumulated.find(Split::Train);
    os << ' ' << (it == r.accumulated.end() ? "-" : fmt1(it->second.success_rate)) << " |\n";
  }

  os << "\n## Accumulated training set\n\n";
  metrics_table(os, rounds, Split::Train, true);
  for (Split s : {Split::Valid, Split::Test}) {
    bool any = false;
    for (const auto& r : rounds) any = any || r.single_shot.count(s);
    if (!any) continue;
    os << "\n## Single-shot " << to_string(s) << "\n\n";
    metrics_table(os, rounds, s, false);
    os << "\n## Accumulated " << to_string(s) << " (best over rounds so far)\n\n";
    metrics_table(os, rounds, s, true);
  }
  os << "\n## Training attempts per round (train split)\n\n";
  metrics_table(os, rounds, Split::Train, false);

  os << "\n## Training datasets\n\n";
  os << "| Round | #Total | #Failed | #Failed/#Total (%) |\n|---|---|---|---|\n";
  for (const auto& r : rounds) {
    if (!r.dataset) continue;
    os << "| " << r.round << " | " << r.dataset->total_sequences << " | "
       << r.dataset->failed_sequences << " | " << fmt1(100.0 * r.dataset->failed_ratio) << " |\n";
  }
  return os.str();
}

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::Collect: return "collect";
    case Stage::Dataset: return "dataset";
    case Stage::Train: return "train";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
  }
  return "?";
}

struct Orchestrator::Impl {
  std::shared_ptr<const ToyModel> model;
  PromptLibrary prompts;
  std::ofstream events;
  ojson timing;
  std::string hash;
};

namespace {

std::vector<Trajectory> read_if_exists(const fs::path& p) {
  return fs::exists(p) ? read_trajectories(p) : std::vector<Trajectory>{};
}

void write_json(const fs::path& p, const ojson& j) { write_file_atomic(p, j.dump(2) + "\n"); }

}  // namespace

Orchestrator::Orchestrator(RunConfig config) : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
  config_.validate();
  fixture_ = std::make_shared<const EnvFixture>(build_fixture(config_.env));
  impl_->hash = config_hash(config_);
  impl_->model = std::make_shared<const ToyModel>(
      make_lexicon(config_.env.id),
      ToyModelConfig{config_.training.feature_bits, config_.training.reason_prior});
  impl_->prompts = PromptLibrary::load(config_.prompts_dir);

  fs::create_directories(config_.out);
  const fs::path run = config_.out / "run.json";
  if (fs::exists(run)) {
    const auto j = nlohmann::json::parse(read_file(run));
    if (j.at("config_hash").get<std::string>() != impl_->hash) {
      throw ConfigError("output directory " + config_.out.string() +
                        " holds a run with a different config (hash " +
                        j.at("config_hash").get<std::string>() + ")");
    }
  } else {
    ojson j;
    j["config_hash"] = impl_->hash;
    j["config"] = config_to_json(config_);
    write_json(run, j);
    write_file_atomic(config_.out / "fixture.json", fixture_to_json(*fixture_).dump() + "\n");
  }
  const fs::path timing = config_.out / "timing.json";
  impl_->timing = fs::exists(timing) ? ojson::parse(read_file(timing)) : ojson::object();
  impl_->events.open(config_.out / "events.jsonl", std::ios::app);
  set_log_sink(&impl_->events);
}

Orchestrator::~Orchestrator() { set_log_sink(nullptr); }

fs::path Orchestrator::round_dir(int k) const { return config_.out / ("round_" + std::to_string(k)); }

namespace {

std::vector<std::string> read_stages(const fs::path& dir) {
  const fs::path p = dir / "stages.json";
  if (!fs::exists(p)) return {};
  return nlohmann::json::parse(read_file(p)).at("completed").get<std::vector<std::string>>();
}

}  // namespace

bool Orchestrator::completed(int k, Stage s) const {
  if (k < 0) return false;
  const auto done = read_stages(round_dir(k));
  return std::find(done.begin(), done.end(), to_string(s)) != done.end();
}

namespace {

struct StageTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

}  // namespace

namespace {

StageTimer begin_stage(const Orchestrator& o, int k, Stage s) {
  require(!o.completed(k, s), "round " + std::to_string(k) + " " + std::string(to_string(s)) +
                                  " already complete");
  fs::create_directories(o.round_dir(k));
  return {};
}

}  // namespace

namespace {

void mark_done(const fs::path& dir, Stage s) {
  auto done = read_stages(dir);
  done.emplace_back(to_string(s));
  ojson j;
  j["completed"] = done;
  write_json(dir / "stages.json", j);
}

std::unique_ptr<Backend> make_fixed_backend(const BackendConfig& b) {
  if (b.kind == "scripted") return std::make_unique<ScriptedBackend>(ScriptedBackend::from_json_file(b.script));
  if (b.kind == "http") return std::make_unique<HttpBackend>(b.http);
  throw InvariantError("backend kind '" + b.kind + "' needs parameters");
}

}  // namespace

namespace {

class Stages {
 public:
  Stages(const fs::path& out, ojson& timing) : out_(out), timing_(timing) {}
  void finish(const fs::path& dir, int k, Stage s, double seconds) {
    mark_done(dir, s);
    timing_["round_" + std::to_string(k)][std::string(to_string(s))] = seconds;
    write_json(out_ / "timing.json", timing_);
    log_event({{"event", "stage_done"}, {"round", k}, {"stage", to_string(s)}, {"seconds", seconds}});
  }

 private:
  fs::path out_;
  ojson& timing_;
};

}  // namespace

TrajectoryStore Orchestrator::load_store(int up_to_round) const {
  std::vector<fs::path> dirs;
  for (int r = 0; r <= up_to_round; ++r) {
    if (!completed(r, Stage::Collect)) break;
    dirs.push_back(round_dir(r));
  }
  if (dirs.empty()) return {};
  return TrajectoryStore::load(dirs);
}

int Orchestrator::latest_trained_round() const {
  int k = -1;
  while (completed(k + 1, Stage::Train)) ++k;
  return k;
}

namespace {

std::vector<Trajectory> run_rollouts(const std::shared_ptr<const EnvFixture>& fixture, Backend& backend,
                                     const PromptLibrary& prompts, const std::vector<TaskSpec>& tasks,
                                     double temperature, int max_steps, std::uint64_t base_seed,
                                     int round, Origin origin, int workers) {
  std::vector<Trajectory> out(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    auto env = make_environment(fixture);
    out[i] = policy_rollout(*env, backend, prompts, tasks[i], temperature, max_steps,
                            derive_seed(base_seed, tasks[i].task_id), round, origin);
  });
  return out;
}

std::shared_ptr<const ToyPolicyParams> load_params(const fs::path& dir) {
  const fs::path p = dir / "params.json";
  if (!fs::exists(p)) throw IoError("missing " + p.string());
  return std::make_shared<const ToyPolicyParams>(params_from_json(nlohmann::json::parse(read_file(p))));
}

}  // namespace

void Orchestrator::collect(int k) {
  require(k >= 0, "round must be >= 0");
  const StageTimer timer = begin_stage(*this, k, Stage::Collect);
  const fs::path dir = round_dir(k);
  const auto train = fixture_->tasks_in(Split::Train);
  const double thr = config_.shaping.success_threshold;
  TrajectoryStore store = load_store(k - 1);

  if (k == 0) {
    require(store.size() == 0, "round 0 needs a fresh output directory");
    std::unique_ptr<Backend> owned;
    Backend* prompting = nullptr;
    if (config_.prompting.kind == "toy") {
      owned = std::make_unique<ToyBackend>(
          impl_->model, std::make_shared<const ToyPolicyParams>(
                            impl_->model->prior_params(config_.prompting.prior_strength)));
    } else {
      owned = make_fixed_backend(config_.prompting);
    }
    prompting = owned.get();
    const std::uint64_t seed = derive_seed(config_.run_seed, "bootstrap");
    auto rollouts = run_rollouts(fixture_, *prompting, impl_->prompts, train, config_.prompting.temperature,
                                 config_.eval_max_steps, seed, 0, Origin::Bootstrap, config_.workers);
    write_trajectories(dir / "bootstrap.traj.jsonl", rollouts);
    store.begin_round(0);
    std::vector<std::string> attempted;
    for (auto& t : rollouts) {
      attempted.push_back(t.task_id);
      if (t.terminal_reward >= thr) {
        store.append(t);
      } else {
        log_event({{"event", "bootstrap_failure"}, {"task_id", t.task_id}, {"reward", t.terminal_reward}});
      }
    }
    if (store.size() == 0) {
      throw Error("bootstrap produced no trajectory with reward >= " + fmt1(thr) + " over " +
                  std::to_string(train.size()) + " training tasks; see " +
                  (dir / "bootstrap.traj.jsonl").string());
    }
    store.set_manifest({0, attempted, store.size(), impl_->hash, seed});
    store.save_round(dir, 0);
    Stages(config_.out, impl_->timing).finish(dir, k, Stage::Collect, timer.seconds());
    return;
  }

  require(completed(k - 1, Stage::Train), "round " + std::to_string(k - 1) + " is not trained yet");
  require(store.current_round() == k - 1, "store does not end at round " + std::to_string(k - 1));

  std::shared_ptr<Backend> policy;
  std::shared_ptr<Backend> actre;
  if (config_.policy.kind == "toy") {
    policy = std::make_shared<ToyBackend>(impl_->model, load_params(round_dir(k - 1)));
  } else {
    policy = make_fixed_backend(config_.policy);
  }
  if (config_.actre.kind == "toy") {
    actre = std::make_shared<ToyBackend>(
        impl_->model,
        std::make_shared<const ToyPolicyParams>(impl_->model->prior_params(config_.actre.prior_strength)));
  } else {
    actre = make_fixed_backend(config_.actre);
  }

  const std::uint64_t eval_seed = derive_seed(config_.run_seed, "eval/train", static_cast<std::uint64_t>(k - 1));
  auto greedy = run_rollouts(fixture_, *policy, impl_->prompts, train, 0.0, config_.eval_max_steps,
                             eval_seed, k, Origin::PolicyOnly, config_.workers);
  write_trajectories(dir / "eval_train.traj.jsonl", greedy);

  std::vector<std::size_t> failed;
  for (std::size_t i = 0; i < greedy.size(); ++i) {
    if (greedy[i].terminal_reward < thr) failed.push_back(i);
  }
  const std::uint64_t seed = derive_seed(config_.run_seed, "collect", static_cast<std::uint64_t>(k));
  std::vector<std::vector<Trajectory>> groups(failed.size());
  Agents agents{*policy, *actre, impl_->prompts};
  const EnvFactory factory = [this] { return make_environment(fixture_); };
  parallel_for(failed.size(), config_.workers, [&](std::size_t i) {
    groups[i] = collect_for_task(factory, agents, train[failed[i]], config_.exploration, seed, k);
  });

  std::vector<Trajectory> collected;
  TaskGroups to_filter;
  std::vector<std::string> attempted;
  for (std::size_t i = 0; i < failed.size(); ++i) {
    const auto& task = train[failed[i]];
    attempted.push_back(task.task_id);
    auto& g = to_filter[task.task_id];
    g = groups[i];
    g.push_back(greedy[failed[i]]);
    collected.insert(collected.end(), groups[i].begin(), groups[i].end());
  }
  write_trajectories(dir / "collect.traj.jsonl", collected);

  const TaskGroups kept = filter_for_training(to_filter, thr);
  store.begin_round(k);
  std::size_t added = 0;
  for (std::size_t i = 0; i < failed.size(); ++i) {
    auto it = kept.find(train[failed[i]].task_id);
    if (it == kept.end()) continue;
    for (const auto& t : it->second) {
      store.append(t);
      ++added;
    }
  }
  store.set_manifest({k, attempted, added, impl_->hash, seed});
  store.save_round(dir, k);
  log_event({{"event", "collect"}, {"round", k}, {"failed_tasks", failed.size()},
             {"collected", collected.size()}, {"stored", added}});
  Stages(config_.out, impl_->timing).finish(dir, k, Stage::Collect, timer.seconds());
}

namespace {

ShapedSet shape_round(const Orchestrator& o, const RunConfig& c, int k) {
  const TrajectoryStore store = o.load_store(k);
  const auto groups = store.group_by_task(k);
  for (const auto& [task, ts] : groups) {
    if (o.fixture().task(task).split != Split::Train) {
      throw InvariantError("task " + task + " is not a training task but is in the store");
    }
  }
  ShapingPolicy policy = c.shaping;
  if (k == 0) policy.mode = ShapingPolicy::Mode::SupervisedOnly;
  return shape_rewards(groups, policy);
}

std::string dataset_name(int k) { return "round_" + std::to_string(k) + ".dataset.jsonl"; }
std::string stats_name(int k) { return "round_" + std::to_string(k) + ".dataset.stats.json"; }

}  // namespace

DatasetStats Orchestrator::build_dataset(int k) {
  require(completed(k, Stage::Collect), "round " + std::to_string(k) + " has not been collected");
  const StageTimer timer = begin_stage(*this, k, Stage::Dataset);
  const fs::path dir = round_dir(k);
  const ShapedSet shaped = shape_round(*this, config_, k);
  for (const auto& w : shaped.warnings) log_event({{"event", "shaping_warning"}, {"round", k}, {"message", w}});
  const DatasetStats stats = emit_dataset(shaped.examples, dir / dataset_name(k));
  write_json(dir / stats_name(k), stats_to_json(stats));
  Stages(config_.out, impl_->timing).finish(dir, k, Stage::Dataset, timer.seconds());
  return stats;
}

void Orchestrator::train(int k) {
  require(completed(k, Stage::Dataset), "round " + std::to_string(k) + " has no dataset");
  const StageTimer timer = begin_stage(*this, k, Stage::Train);
  const fs::path dir = round_dir(k);
  ojson log;
  if (config_.policy.kind != "toy") {
    log["skipped"] = "policy backend '" + config_.policy.kind + "' is not trainable here";
  } else {
    const ShapedSet shaped = shape_round(*this, config_, k);
    TrainerConfig tc = config_.training.trainer;
    if (k == 0) tc.epochs = config_.training.epochs_round0;
    const TrainResult r = train_toy(*impl_->model, impl_->model->initial_params(), shaped.examples, tc);
    write_file_atomic(dir / "params.json", params_to_json(r.params).dump() + "\n");
    log["epochs"] = tc.epochs;
    log["examples"] = shaped.examples.size();
    log["objective_per_epoch"] = r.objective_per_epoch;
  }
  write_json(dir / "train.json", log);
  Stages(config_.out, impl_->timing).finish(dir, k, Stage::Train, timer.seconds());
}

namespace {

std::string eval_name(Split s) { return "eval_" + std::string(to_string(s)) + ".traj.jsonl"; }

}  // namespace

void Orchestrator::evaluate_round(int k) {
  require(completed(k, Stage::Train), "round " + std::to_string(k) + " is not trained yet");
  const StageTimer timer = begin_stage(*this, k, Stage::Evaluate);
  const fs::path dir = round_dir(k);
  for (Split s : {Split::Valid, Split::Test}) {
    if (fixture_->tasks_in(s).empty()) continue;
    evaluate(s, 1, k);
  }
  Stages(config_.out, impl_->timing).finish(dir, k, Stage::Evaluate, timer.seconds());
}

Metrics Orchestrator::evaluate(Split split, int shots, std::optional<int> k) {
  require(shots >= 1, "shots must be >= 1");
  const int last = k.value_or(latest_trained_round());
  require(last >= 0 && completed(last, Stage::Train), "no trained round to evaluate");
  const auto tasks = fixture_->tasks_in(split);
  require(!tasks.empty(), "split " + std::string(to_string(split)) + " has no tasks");

  std::vector<std::vector<Trajectory>> per_round;
  for (int r = std::max(0, last - shots + 1); r <= last; ++r) {
    const fs::path cached = split == Split::Train
                                ? config_.out / "eval" / ("train_round_" + std::to_string(r) + ".traj.jsonl")
                                : round_dir(r) / eval_name(split);
    if (fs::exists(cached)) {
      per_round.push_back(read_trajectories(cached));
      continue;
    }
    std::shared_ptr<Backend> policy;
    if (config_.policy.kind == "toy") {
      policy = std::make_shared<ToyBackend>(impl_->model, load_params(round_dir(r)));
    } else {
      policy = make_fixed_backend(config_.policy);
    }
    const std::string key = "eval/" + std::string(to_string(split));
    auto rollouts = run_rollouts(fixture_, *policy, impl_->prompts, tasks, 0.0, config_.eval_max_steps,
                                 derive_seed(config_.run_seed, key, static_cast<std::uint64_t>(r)), r,
                                 Origin::PolicyOnly, config_.workers);
    fs::create_directories(cached.parent_path());
    write_trajectories(cached, rollouts);
    per_round.push_back(std::move(rollouts));
  }
  return evaluate_shots(tasks, per_round, shots);
}

RoundReport Orchestrator::report_round(int k) {
  require(completed(k, Stage::Evaluate), "round " + std::to_string(k) + " is not evaluated yet");
  const StageTimer timer = begin_stage(*this, k, Stage::Report);
  const fs::path dir = round_dir(k);
  RoundReport rep;
  rep.round = k;

  const auto train = fixture_->tasks_in(Split::Train);
  std::vector<std::vector<Trajectory>> gathered;
  gathered.push_back(read_trajectories(round_dir(0) / "bootstrap.traj.jsonl"));
  for (int r = 1; r <= k; ++r) {
    gathered.push_back(read_trajectories(round_dir(r) / "eval_train.traj.jsonl"));
    gathered.push_back(read_if_exists(round_dir(r) / "collect.traj.jsonl"));
  }
  const auto best = best_rewards(train, gathered);
  rep.accumulated[Split::Train] = metrics_of(best);
  rep.single_shot[Split::Train] = metrics_of(best_rewards(train, {k == 0 ? gathered[0] : gathered[2 * k - 1]}));
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_type;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto& [ok, n] = by_type[train[i].task_type];
    ok += best[i] >= 1.0;
    ++n;
  }
  for (const auto& [type, c] : by_type) {
    rep.accumulated_success_by_type[type] = 100.0 * static_cast<double>(c.first) / static_cast<double>(c.second);
  }

  for (Split s : {Split::Valid, Split::Test}) {
    const auto tasks = fixture_->tasks_in(s);
    if (tasks.empty()) continue;
    std::vector<std::vector<Trajectory>> per_round;
    for (int r = 0; r <= k; ++r) per_round.push_back(read_trajectories(round_dir(r) / eval_name(s)));
    rep.single_shot[s] = evaluate_shots(tasks, per_round, 1);
    rep.accumulated[s] = evaluate_shots(tasks, per_round, k + 1);
  }
  rep.dataset = stats_from_json(nlohmann::json::parse(read_file(dir / stats_name(k))));
  rep.store_size = load_store(k).size();
  write_json(dir / "report.json", report_to_json(rep));
  Stages(config_.out, impl_->timing).finish(dir, k, Stage::Report, timer.seconds());
  write_report();
  return rep;
}

RoundReport Orchestrator::run_round(int k) {
  if (!completed(k, Stage::Collect)) collect(k);
  if (!completed(k, Stage::Dataset)) build_dataset(k);
  if (!completed(k, Stage::Train)) train(k);
  if (!completed(k, Stage::Evaluate)) evaluate_round(k);
  if (!completed(k, Stage::Report)) return report_round(k);
  return report_from_json(nlohmann::json::parse(read_file(round_dir(k) / "report.json")));
}

std::vector<RoundReport> Orchestrator::loop(int rounds) {
  require(rounds >= 1, "rounds must be >= 1");
  std::vector<RoundReport> out;
  for (int k = 0; k < rounds; ++k) out.push_back(run_round(k));
  write_report();
  return out;
}

std::vector<RoundReport> Orchestrator::completed_reports() const {
  std::vector<RoundReport> out;
  for (int k = 0; completed(k, Stage::Report); ++k) {
    out.push_back(report_from_json(nlohmann::json::parse(read_file(round_dir(k) / "report.json"))));
  }
  return out;
}

void Orchestrator::write_report() const {
  const auto reports = completed_reports();
  ojson j;
  j["env_id"] = config_.env.id;
  j["config_hash"] = impl_->hash;
  j["rounds"] = ojson::array();
  for (const auto& r : reports) j["rounds"].push_back(report_to_json(r));
  write_json(config_.out / "report.json", j);
  write_file_atomic(config_.out / "report.md", render_report_markdown(reports, config_.env.id));
}

}  // namespace trajloop
