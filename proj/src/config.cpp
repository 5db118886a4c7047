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

#include "trajloop/config.hpp"

#include <set>
#include <sstream>

#include <toml.hpp>

#include "trajloop/errors.hpp"
#include "trajloop/hash.hpp"
#include "trajloop/io.hpp"
#include "trajloop/minishop.hpp"
#include "trajloop/treasuregrid.hpp"

namespace trajloop {

namespace {

// Reads keys out of one table and remembers which ones were consumed, so
// anything left over can be reported.
class Section {
 public:
  Section(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!t_) return;
    const toml::node* n = t_->get(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, bool>) {
      auto v = n->value<bool>();
      if (!v) fail(key, "a boolean");
      out = *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      auto v = n->value<std::string>();
      if (!v) fail(key, "a string");
      out = *v;
    } else if constexpr (std::is_floating_point_v<T>) {
      auto v = n->value<double>();
      if (!v) fail(key, "a number");
      out = *v;
    } else {
      if (!n->is_integer()) fail(key, "an integer");
      auto v = *n->value<std::int64_t>();
      if (std::is_unsigned_v<T> && v < 0) fail(key, "non-negative");
      out = static_cast<T>(v);
    }
  }

  void finish() const {
    if (!t_) return;
    for (auto&& [k, v] : *t_) {
      if (!seen_.count(std::string(k.str()))) {
        throw ConfigError("unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
      }
    }
  }

 private:
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("[" + name_ + "] " + key + " must be " + what);
  }

  const toml::table* t_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_backend(const toml::table* t, const std::string& name, BackendConfig& b,
                  const std::filesystem::path& base) {
  Section s(t, name);
  s.get("kind", b.kind);
  s.get("prior_strength", b.prior_strength);
  s.get("temperature", b.temperature);
  s.get("script", b.script);
  s.get("base_url", b.http.base_url);
  s.get("model", b.http.model);
  s.get("api_key_env", b.http.api_key_env);
  s.get("timeout_seconds", b.http.timeout_seconds);
  s.get("max_tries", b.http.max_tries);
  s.get("backoff_base_seconds", b.http.backoff_base_seconds);
  s.finish();
  if (!b.script.empty() && !base.empty()) b.script = (base / b.script).lexically_normal().string();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

void check_backend(const BackendConfig& b, const std::string& role) {
  if (b.kind == "toy") {
    if (b.prior_strength < 0.0) throw ConfigError(role + ": prior_strength must be >= 0");
  } else if (b.kind == "scripted") {
    if (b.script.empty()) throw ConfigError(role + ": scripted backend needs 'script'");
  } else if (b.kind == "http") {
    if (b.http.base_url.empty()) throw ConfigError(role + ": http backend needs 'base_url'");
    if (b.http.max_tries < 1) throw ConfigError(role + ": max_tries must be >= 1");
  } else {
    throw ConfigError(role + ": unknown backend kind '" + b.kind + "'");
  }
  if (b.temperature < 0.0) throw ConfigError(role + ": temperature must be >= 0");
}

nlohmann::ordered_json backend_json(const BackendConfig& b) {
  nlohmann::ordered_json j;
  j["kind"] = b.kind;
  if (b.kind == "toy") j["prior_strength"] = b.prior_strength;
  if (b.kind == "scripted") j["script"] = b.script;
  if (b.kind == "http") {
    j["base_url"] = b.http.base_url;
    j["model"] = b.http.model;
  }
  j["temperature"] = b.temperature;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (eval_max_steps < 1) throw ConfigError("eval_max_steps must be >= 1");
  bool known = false;
  for (const auto& id : registered_env_ids()) known = known || id == env.id;
  if (!known) throw ConfigError("unknown env id '" + env.id + "'");
  if (env.fixture.empty() && (env.train_tasks < 1 || env.valid_tasks < 0 || env.test_tasks < 1)) {
    throw ConfigError("need at least one train and one test task");
  }
  if (env.max_required_attributes < 1 || env.required_options < 1) {
    throw ConfigError("max_required_attributes and required_options must be >= 1");
  }
  exploration.validate();
  shaping.validate();
  check_backend(policy, "backends.policy");
  check_backend(actre, "backends.actre");
  check_backend(prompting, "backends.prompting");
  const auto& t = training.trainer;
  if (training.epochs_round0 < 1 || t.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(t.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (training.feature_bits < 4 || training.feature_bits > 24) {
    throw ConfigError("feature_bits must be in [4, 24]");
  }
}

RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
  RunConfig c;
  const auto table = [&](const char* k) { return root[k].as_table(); };
  for (auto&& [k, v] : root) {
    static const std::set<std::string> known = {"env", "exploration", "shaping", "backends",
                                                "trainer", "run"};
    if (!known.count(std::string(k.str())) || !v.is_table()) {
      throw ConfigError("unknown section [" + std::string(k.str()) + "]");
    }
  }

  {
    Section s(table("env"), "env");
    s.get("id", c.env.id);
    s.get("fixture", c.env.fixture);
    s.get("seed", c.env.seed);
    s.get("train_tasks", c.env.train_tasks);
    s.get("valid_tasks", c.env.valid_tasks);
    s.get("test_tasks", c.env.test_tasks);
    s.get("max_steps", c.env.max_steps);
    s.get("rooms", c.env.rooms);
    s.get("receptacles_per_room", c.env.receptacles_per_room);
    s.get("distractors", c.env.distractors);
    s.get("closed_probability", c.env.closed_probability);
    s.get("products_per_category", c.env.products_per_category);
    s.get("page_size", c.env.page_size);
    s.get("max_required_attributes", c.env.max_required_attributes);
    s.get("required_options", c.env.required_options);
    s.finish();
    if (!c.env.fixture.empty()) c.env.fixture = resolve(base_dir, c.env.fixture).string();
  }
  {
    Section s(table("exploration"), "exploration");
    auto& e = c.exploration;
    std::string budget = "fixed_count";
    int count = 40, force = 3, cap = 20;
    s.get("sample_probability", e.sample_probability);
    s.get("invalid_streak_threshold", e.invalid_streak_threshold);
    s.get("max_steps", e.max_steps);
    s.get("temperature", e.temperature);
    s.get("budget", budget);
    s.get("count", count);
    s.get("force", force);
    s.get("cap", cap);
    s.finish();
    if (budget == "fixed_count") {
      e.budget = Budget::fixed_count(count);
    } else if (budget == "force_then_stop") {
      e.budget = Budget::force_then_stop(force, cap);
    } else {
      throw ConfigError("unknown budget '" + budget + "'");
    }
  }
  {
    Section s(table("shaping"), "shaping");
    auto& p = c.shaping;
    std::string mode = std::string(to_string(p.mode));
    double failure_weight = 0.0;
    bool has_override = false;
    s.get("mode", mode);
    s.get("fixed_value", p.fixed_value);
    s.get("success_threshold", p.success_threshold);
    s.get("label_condition", p.label_condition);
    s.get("negative_world_model", p.negative_world_model);
    if (auto* t = table("shaping"); t && t->contains("failure_weight")) has_override = true;
    s.get("failure_weight", failure_weight);
    s.finish();
    try {
      p.mode = parse_shaping_mode(mode);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    if (has_override) p.failure_weight_override = failure_weight;
  }
  if (auto* b = table("backends")) {
    for (auto&& [k, v] : *b) {
      const std::string role(k.str());
      if (!v.is_table()) throw ConfigError("backends." + role + " must be a table");
      if (role == "policy") {
        read_backend(v.as_table(), "backends.policy", c.policy, base_dir);
      } else if (role == "actre") {
        read_backend(v.as_table(), "backends.actre", c.actre, base_dir);
      } else if (role == "prompting") {
        read_backend(v.as_table(), "backends.prompting", c.prompting, base_dir);
      } else {
        throw ConfigError("unknown backend role '" + role + "'");
      }
    }
  }
  {
    Section s(table("trainer"), "trainer");
    auto& t = c.training;
    std::string optimizer = std::string(to_string(t.trainer.optimizer));
    s.get("epochs_round0", t.epochs_round0);
    s.get("epochs", t.trainer.epochs);
    s.get("learning_rate", t.trainer.learning_rate);
    s.get("optimizer", optimizer);
    s.get("adam_beta1", t.trainer.adam_beta1);
    s.get("adam_beta2", t.trainer.adam_beta2);
    s.get("adam_epsilon", t.trainer.adam_epsilon);
    s.get("world_model", t.trainer.objective.include_world_model);
    s.get("feature_bits", t.feature_bits);
    s.get("reason_prior", t.reason_prior);
    s.finish();
    try {
      t.trainer.optimizer = parse_optimizer(optimizer);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  {
    Section s(table("run"), "run");
    std::string out = c.out.string(), prompts = c.prompts_dir.string();
    s.get("rounds", c.rounds);
    s.get("run_seed", c.run_seed);
    s.get("workers", c.workers);
    s.get("eval_max_steps", c.eval_max_steps);
    s.get("out", out);
    s.get("prompts_dir", prompts);
    s.finish();
    c.out = resolve(base_dir, out);
    c.prompts_dir = resolve(base_dir, prompts);
  }
  c.training.trainer.objective.negative_world_model = c.shaping.negative_world_model;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  // Relative paths in a config are taken relative to the working directory,
  // which is where the CLI is normally run from.
  return parse_config(read_file(path), {});
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  auto& e = j["env"];
  e["id"] = c.env.id;
  if (!c.env.fixture.empty()) {
    e["fixture"] = c.env.fixture;
  } else {
    e["seed"] = c.env.seed;
    e["train_tasks"] = c.env.train_tasks;
    e["valid_tasks"] = c.env.valid_tasks;
    e["test_tasks"] = c.env.test_tasks;
    e["max_steps"] = c.env.max_steps;
    if (c.env.id == "treasuregrid") {
      e["rooms"] = c.env.rooms;
      e["receptacles_per_room"] = c.env.receptacles_per_room;
      e["distractors"] = c.env.distractors;
      e["closed_probability"] = c.env.closed_probability;
    } else {
      e["products_per_category"] = c.env.products_per_category;
      e["page_size"] = c.env.page_size;
      e["max_required_attributes"] = c.env.max_required_attributes;
      e["required_options"] = c.env.required_options;
    }
  }
  auto& x = j["exploration"];
  x["sample_probability"] = c.exploration.sample_probability;
  x["invalid_streak_threshold"] = c.exploration.invalid_streak_threshold;
  if (c.exploration.budget.mode == Budget::Mode::FixedCount) {
    x["budget"] = "fixed_count";
    x["count"] = c.exploration.budget.count;
  } else {
    x["budget"] = "force_then_stop";
    x["force"] = c.exploration.budget.force;
    x["cap"] = c.exploration.budget.cap;
  }
  x["max_steps"] = c.exploration.max_steps;
  x["temperature"] = c.exploration.temperature;
  auto& s = j["shaping"];
  s["mode"] = to_string(c.shaping.mode);
  s["fixed_value"] = c.shaping.fixed_value;
  s["success_threshold"] = c.shaping.success_threshold;
  s["label_condition"] = c.shaping.label_condition;
  s["negative_world_model"] = c.shaping.negative_world_model;
  if (c.shaping.failure_weight_override) s["failure_weight"] = *c.shaping.failure_weight_override;
  j["backends"]["policy"] = backend_json(c.policy);
  j["backends"]["actre"] = backend_json(c.actre);
  j["backends"]["prompting"] = backend_json(c.prompting);
  auto& t = j["trainer"];
  t["epochs_round0"] = c.training.epochs_round0;
  t["epochs"] = c.training.trainer.epochs;
  t["learning_rate"] = c.training.trainer.learning_rate;
  t["optimizer"] = to_string(c.training.trainer.optimizer);
  if (c.training.trainer.optimizer == TrainerConfig::Optimizer::Adam) {
    t["adam_beta1"] = c.training.trainer.adam_beta1;
    t["adam_beta2"] = c.training.trainer.adam_beta2;
    t["adam_epsilon"] = c.training.trainer.adam_epsilon;
  }
  t["world_model"] = c.training.trainer.objective.include_world_model;
  t["feature_bits"] = c.training.feature_bits;
  t["reason_prior"] = c.training.reason_prior;
  auto& r = j["run"];
  r["rounds"] = c.rounds;
  r["run_seed"] = c.run_seed;
  r["eval_max_steps"] = c.eval_max_steps;
  return j;
}

std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(config_to_json(c).dump())); }

EnvFixture build_fixture(const EnvConfig& env) {
  if (!env.fixture.empty()) {
    EnvFixture f = load_fixture(env.fixture);
    if (f.env_id != env.id) {
      throw ConfigError("fixture is for '" + f.env_id + "', config says '" + env.id + "'");
    }
    return f;
  }
  if (env.id == "treasuregrid") {
    treasuregrid::GeneratorParams g;
    g.rooms = env.rooms;
    g.receptacles_per_room = env.receptacles_per_room;
    g.distractors = env.distractors;
    g.closed_probability = env.closed_probability;
    g.train_tasks = env.train_tasks;
    g.valid_tasks = env.valid_tasks;
    g.test_tasks = env.test_tasks;
    g.max_steps = env.max_steps;
    g.seed = env.seed;
    return treasuregrid::generate(g);
  }
  if (env.id == "minishop") {
    minishop::GeneratorParams g;
    g.products_per_category = env.products_per_category;
    g.page_size = env.page_size;
    g.max_required_attributes = env.max_required_attributes;
    g.required_options = env.required_options;
    g.train_tasks = env.train_tasks;
    g.valid_tasks = env.valid_tasks;
    g.test_tasks = env.test_tasks;
    g.max_steps = env.max_steps;
    g.seed = env.seed;
    return minishop::generate(g);
  }
  throw ConfigError("unknown env id '" + env.id + "'");
}

}  // namespace trajloop
