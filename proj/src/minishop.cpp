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

#include "trajloop/minishop.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "trajloop/errors.hpp"
#include "trajloop/hash.hpp"

namespace trajloop::minishop {

namespace {

struct CategorySpec {
  std::string_view name;
  std::vector<std::string_view> attributes;
  std::vector<std::pair<std::string_view, std::vector<std::string_view>>> options;
};

const std::vector<CategorySpec>& categories() {
  static const std::vector<CategorySpec> kCategories = {
      {"shampoo",
       {"organic", "vegan", "herbal", "unscented", "moisturizing"},
       {{"scent", {"citrus", "lavender", "mint"}}, {"size", {"small", "large"}}}},
      {"deodorant",
       {"natural", "sensitive", "organic", "vegan", "travel"},
       {{"scent", {"citrus", "ginger", "lavender"}}, {"size", {"single", "twin"}}}},
      {"shirt",
       {"cotton", "slim", "breathable", "striped", "washable"},
       {{"color", {"red", "blue", "black", "white"}}, {"size", {"small", "medium", "large"}}}},
      {"candle",
       {"soy", "scented", "natural", "handmade", "smokeless"},
       {{"scent", {"vanilla", "pine", "rose"}}, {"size", {"small", "large"}}}},
      {"headphones",
       {"wireless", "foldable", "waterproof", "quiet", "lightweight"},
       {{"color", {"black", "silver", "white"}}}},
  };
  return kCategories;
}

constexpr std::string_view kBrands[] = {"Acme", "Nova", "Zenith", "Lumen", "Orbit", "Harbor"};

std::vector<std::string> terms_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string money(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

bool starts_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(0, p.size()) == p;
}

std::string join(const std::vector<std::string>& xs, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

Requirements requirements_from_json(const nlohmann::json& j) {
  Requirements r;
  r.category = j.at("category").get<std::string>();
  r.attributes = j.at("attributes").get<std::vector<std::string>>();
  for (const auto& o : j.at("options")) {
    r.options.emplace_back(o.at(0).get<std::string>(), o.at(1).get<std::string>());
  }
  r.price_cap = j.at("price_cap").get<double>();
  return r;
}

nlohmann::json requirements_to_json(const std::string& task_id, const Requirements& r) {
  nlohmann::json opts = nlohmann::json::array();
  for (const auto& [name, value] : r.options) opts.push_back({name, value});
  return {{"task_id", task_id},
          {"category", r.category},
          {"attributes", r.attributes},
          {"options", opts},
          {"price_cap", r.price_cap}};
}

}  // namespace

Catalog::Catalog(std::vector<Product> products) : products_(std::move(products)) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < products_.size(); ++i) {
    const auto& p = products_[i];
    if (!ids.insert(p.product_id).second) throw ConfigError("duplicate product id " + p.product_id);
    for (const auto& [name, values] : p.options) {
      if (values.empty()) throw ConfigError("empty option list '" + name + "' on " + p.product_id);
    }
    std::set<std::string> terms;
    for (auto& t : terms_of(p.title)) terms.insert(std::move(t));
    terms.insert(p.category);
    terms.insert(p.attributes.begin(), p.attributes.end());
    for (const auto& t : terms) index_[t].push_back(i);
  }
}

const Product* Catalog::find(std::string_view product_id) const {
  for (const auto& p : products_) {
    if (p.product_id == product_id) return &p;
  }
  return nullptr;
}

std::vector<const Product*> Catalog::search(std::string_view query) const {
  std::vector<int> score(products_.size(), 0);
  std::set<std::string> seen;
  for (const auto& t : terms_of(query)) {
    if (!seen.insert(t).second) continue;
    auto it = index_.find(t);
    if (it == index_.end()) continue;
    for (auto i : it->second) ++score[i];
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < products_.size(); ++i) {
    if (score[i] > 0) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return products_[a].product_id < products_[b].product_id;
  });
  std::vector<const Product*> out;
  for (auto i : order) out.push_back(&products_[i]);
  return out;
}

std::string instruction_text(const Requirements& req) {
  std::string s = "i am looking for ";
  if (req.attributes.empty()) {
    s += "a " + req.category;
  } else {
    s += "a " + join(req.attributes, " and ") + " " + req.category;
  }
  if (!req.options.empty()) {
    std::vector<std::string> vals;
    for (const auto& [name, value] : req.options) vals.push_back(name + " " + value);
    s += " with " + join(vals, " and ");
  }
  s += ", and price lower than " + money(req.price_cap) + " dollars";
  return s;
}

double purchase_reward(const Requirements& req, const Product& product,
                       const std::map<std::string, std::string>& selected) {
  int matched = 0;
  for (const auto& a : req.attributes) matched += product.attributes.count(a) ? 1 : 0;
  for (const auto& [name, value] : req.options) {
    auto it = selected.find(name);
    matched += (it != selected.end() && it->second == value) ? 1 : 0;
  }
  matched += product.price <= req.price_cap ? 1 : 0;
  const int total = static_cast<int>(req.attributes.size() + req.options.size()) + 1;
  return static_cast<double>(matched) / static_cast<double>(total);
}

std::vector<std::string> search_queries(const Requirements& req) {
  std::vector<std::string> out;
  if (!req.attributes.empty()) out.push_back(join(req.attributes, " ") + " " + req.category);
  out.push_back(req.category);
  return out;
}

nlohmann::json product_to_json(const Product& p) {
  nlohmann::json opts = nlohmann::json::array();
  for (const auto& [name, values] : p.options) opts.push_back({{"name", name}, {"values", values}});
  return {{"product_id", p.product_id}, {"title", p.title},         {"category", p.category},
          {"attributes", p.attributes}, {"options", opts},          {"price", p.price}};
}

Product product_from_json(const nlohmann::json& j) {
  Product p;
  p.product_id = j.at("product_id").get<std::string>();
  p.title = j.at("title").get<std::string>();
  p.category = j.at("category").get<std::string>();
  p.attributes = j.at("attributes").get<std::set<std::string>>();
  for (const auto& o : j.at("options")) {
    p.options.emplace_back(o.at("name").get<std::string>(),
                           o.at("values").get<std::vector<std::string>>());
  }
  p.price = j.at("price").get<double>();
  return p;
}

EnvFixture make_fixture(std::vector<Product> products, std::vector<ShopTask> tasks,
                        std::vector<Split> splits, int page_size, int max_steps) {
  if (tasks.size() != splits.size()) throw ConfigError("one split per task required");
  if (page_size < 1) throw ConfigError("page_size must be >= 1");
  Catalog check(products);  // validates ids and option lists
  EnvFixture f;
  f.env_id = std::string(kEnvId);
  f.max_steps = max_steps;
  nlohmann::json jp = nlohmann::json::array();
  for (const auto& p : products) jp.push_back(product_to_json(p));
  nlohmann::json jt = nlohmann::json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    f.tasks.push_back(TaskSpec{t.task_id, f.env_id, instruction_text(t.requirements),
                               t.requirements.category, splits[i]});
    jt.push_back(requirements_to_json(t.task_id, t.requirements));
  }
  f.world = {{"page_size", page_size}, {"products", jp}, {"tasks", jt}};
  return f;
}

EnvFixture generate(const GeneratorParams& params) {
  Rng rng(derive_seed(params.seed, "minishop-catalog"));
  std::vector<Product> products;
  int serial = 0;
  for (const auto& cat : categories()) {
    for (int i = 0; i < params.products_per_category; ++i) {
      Product p;
      char id[16];
      std::snprintf(id, sizeof id, "P%03d", serial++);
      p.product_id = id;
      p.category = std::string(cat.name);
      std::vector<std::string> attrs(cat.attributes.begin(), cat.attributes.end());
      for (std::size_t k = attrs.size(); k > 1; --k) std::swap(attrs[k - 1], attrs[rng.below(k)]);
      const std::size_t n_attrs = 1 + rng.below(3);
      attrs.resize(n_attrs);
      p.attributes.insert(attrs.begin(), attrs.end());
      const std::string brand(kBrands[rng.below(std::size(kBrands))]);
      p.title = brand + " " + join(attrs, " ") + " " + p.category;
      for (const auto& [name, values] : cat.options) {
        std::vector<std::string> vals;
        for (const auto& v : values) {
          if (rng.uniform() < 0.7) vals.emplace_back(v);
        }
        if (vals.empty()) vals.emplace_back(values[rng.below(values.size())]);
        p.options.emplace_back(std::string(name), std::move(vals));
      }
      p.price = std::round((5.0 + rng.uniform() * 55.0) * 100.0) / 100.0;
      products.push_back(std::move(p));
    }
  }

  std::vector<ShopTask> tasks;
  std::vector<Split> splits;
  const std::pair<Split, int> plan[] = {{Split::Train, params.train_tasks},
                                        {Split::Valid, params.valid_tasks},
                                        {Split::Test, params.test_tasks}};
  for (const auto& [split, count] : plan) {
    for (int i = 0; i < count; ++i) {
      char id[64];
      std::snprintf(id, sizeof id, "ms-%s-%03d", std::string(to_string(split)).c_str(), i);
      Rng trng(derive_seed(params.seed, id));
      const Product& target = products[trng.below(products.size())];
      Requirements req;
      req.category = target.category;
      std::vector<std::string> attrs(target.attributes.begin(), target.attributes.end());
      for (std::size_t k = attrs.size(); k > 1; --k) std::swap(attrs[k - 1], attrs[trng.below(k)]);
      attrs.resize(std::min<std::size_t>(
          attrs.size(), 1 + trng.below(static_cast<std::uint64_t>(params.max_required_attributes))));
      req.attributes = attrs;
      std::vector<std::size_t> order(target.options.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      const auto n_opts = std::min<std::size_t>(order.size(), static_cast<std::size_t>(params.required_options));
      for (std::size_t k = 0; k < n_opts; ++k) {
        std::swap(order[k], order[k + trng.below(order.size() - k)]);
        const auto& [oname, ovals] = target.options[order[k]];
        req.options.emplace_back(oname, ovals[trng.below(ovals.size())]);
      }
      req.price_cap = std::ceil(target.price + 1.0 + trng.uniform() * 20.0);
      tasks.push_back(ShopTask{id, std::move(req)});
      splits.push_back(split);
    }
  }
  return make_fixture(std::move(products), std::move(tasks), std::move(splits), params.page_size,
                      params.max_steps);
}

MiniShopEnv::MiniShopEnv(std::shared_ptr<const EnvFixture> fixture) : fixture_(std::move(fixture)) {
  if (!fixture_ || fixture_->env_id != kEnvId) throw ConfigError("not a minishop fixture");
  std::vector<Product> products;
  for (const auto& j : fixture_->world.at("products")) products.push_back(product_from_json(j));
  catalog_ = std::make_shared<const Catalog>(std::move(products));
  page_size_ = fixture_->world.value("page_size", 3);
}

EnvObservation MiniShopEnv::reset(const TaskSpec& task, std::uint64_t /*seed*/) {
  if (task.env_id != kEnvId) throw ConfigError("task " + task.task_id + " is not a minishop task");
  const auto& tasks = fixture_->world.at("tasks");
  auto it = std::find_if(tasks.begin(), tasks.end(), [&](const nlohmann::json& j) {
    return j.at("task_id").get_ref<const std::string&>() == task.task_id;
  });
  if (it == tasks.end()) throw ConfigError("no shop task " + task.task_id);
  req_ = requirements_from_json(*it);
  page_ = Page::Search;
  results_.clear();
  results_page_ = 0;
  product_ = nullptr;
  selected_.clear();
  steps_taken_ = 0;
  started_ = true;
  terminal_ = false;
  return EnvObservation{render_search(), false, std::nullopt};
}

std::string MiniShopEnv::render_search() const {
  return "MiniShop\nInstruction:\n" + instruction_text(req_) + "\n[Search]";
}

std::size_t MiniShopEnv::page_count() const {
  const auto ps = static_cast<std::size_t>(page_size_);
  return std::max<std::size_t>(1, (results_.size() + ps - 1) / ps);
}

std::string MiniShopEnv::render_results() const {
  std::ostringstream s;
  s << "[Back to Search]\nPage " << results_page_ + 1 << " (Total results: " << results_.size()
    << ")";
  if (results_page_ > 0) s << "\n[< Prev]";
  if (results_page_ + 1 < page_count()) s << "\n[Next >]";
  const auto ps = static_cast<std::size_t>(page_size_);
  for (std::size_t i = results_page_ * ps; i < std::min(results_.size(), (results_page_ + 1) * ps); ++i) {
    const Product* p = results_[i];
    s << "\n[" << p->product_id << "]\n" << p->title << "\n$" << money(p->price);
  }
  return s.str();
}

std::string MiniShopEnv::render_product() const {
  std::ostringstream s;
  s << "[Back to Search]\n[< Prev]";
  for (const auto& [name, values] : product_->options) {
    s << "\n" << name << " ";
    for (const auto& v : values) s << "[" << v << "]";
  }
  s << "\n" << product_->title << "\nPrice: $" << money(product_->price) << "\n[Buy Now]";
  return s.str();
}

ActionOutcome MiniShopEnv::invalid() const {
  return ActionOutcome{EnvObservation{std::string(kInvalidActionText), false, std::nullopt}, false};
}

ActionOutcome MiniShopEnv::finish(std::string text, std::optional<double> reward) {
  ++steps_taken_;
  if (reward) {
    terminal_ = true;
    return ActionOutcome{EnvObservation{std::move(text), true, reward}, true};
  }
  if (steps_taken_ >= fixture_->max_steps) {
    terminal_ = true;
    return ActionOutcome{EnvObservation{text + "\nYou ran out of steps.", true, 0.0}, true};
  }
  return ActionOutcome{EnvObservation{std::move(text), false, std::nullopt}, true};
}

ActionOutcome MiniShopEnv::step(std::string_view action) {
  if (!started_) throw UsageError("step before reset");
  if (terminal_) throw UsageError("step after the episode ended");
  const auto space = action_space();
  if (std::find(space.begin(), space.end(), action) == space.end() && !is_think_action(action)) {
    return invalid();
  }
  if (is_think_action(action)) return finish(std::string(kThinkObservation), std::nullopt);

  if (starts_with(action, "search[")) {
    const auto query = action.substr(7, action.size() - 8);
    results_ = catalog_->search(query);
    results_page_ = 0;
    page_ = Page::Results;
    return finish(render_results(), std::nullopt);
  }
  const auto target = action.substr(6, action.size() - 7);  // click[...]
  if (target == "Back to Search") {
    page_ = Page::Search;
    product_ = nullptr;
    selected_.clear();
    return finish(render_search(), std::nullopt);
  }
  if (page_ == Page::Results) {
    if (target == "Next >") {
      ++results_page_;
      return finish(render_results(), std::nullopt);
    }
    if (target == "< Prev") {
      --results_page_;
      return finish(render_results(), std::nullopt);
    }
    product_ = catalog_->find(target);
    selected_.clear();
    page_ = Page::Product;
    return finish(render_product(), std::nullopt);
  }
  // Product page.
  if (target == "< Prev") {
    page_ = Page::Results;
    product_ = nullptr;
    selected_.clear();
    return finish(render_results(), std::nullopt);
  }
  if (target == "Buy Now") {
    const double r = purchase_reward(req_, *product_, selected_);
    char buf[96];
    std::snprintf(buf, sizeof buf, "Thank you for your purchase. Your score: %.3f", r);
    return finish(buf, r);
  }
  for (const auto& [name, values] : product_->options) {
    if (std::find(values.begin(), values.end(), target) != values.end()) {
      selected_[name] = std::string(target);
      break;
    }
  }
  return finish("You have clicked " + std::string(target) + ".", std::nullopt);
}

std::vector<std::string> MiniShopEnv::action_space() const {
  std::vector<std::string> out;
  if (!started_ || terminal_) return out;
  switch (page_) {
    case Page::Search:
      for (const auto& q : search_queries(req_)) out.push_back("search[" + q + "]");
      break;
    case Page::Results: {
      out.emplace_back("click[Back to Search]");
      if (results_page_ > 0) out.emplace_back("click[< Prev]");
      if (results_page_ + 1 < page_count()) out.emplace_back("click[Next >]");
      const auto ps = static_cast<std::size_t>(page_size_);
      for (std::size_t i = results_page_ * ps;
           i < std::min(results_.size(), (results_page_ + 1) * ps); ++i) {
        out.push_back("click[" + results_[i]->product_id + "]");
      }
      break;
    }
    case Page::Product:
      out.emplace_back("click[Back to Search]");
      out.emplace_back("click[< Prev]");
      for (const auto& [name, values] : product_->options) {
        for (const auto& v : values) out.push_back("click[" + v + "]");
      }
      out.emplace_back("click[Buy Now]");
      break;
  }
  out.emplace_back(kThinkAction);
  return out;
}

}  // namespace trajloop::minishop
