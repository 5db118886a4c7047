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

// MiniShop: a small shopping site with graded reward. The agent searches a
// catalog, opens a product, picks options and buys.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "trajloop/environment.hpp"

namespace trajloop::minishop {

inline constexpr std::string_view kEnvId = "minishop";
inline constexpr std::string_view kThinkAction = "think[compare the candidates]";

struct Product {
  std::string product_id;
  std::string title;
  std::string category;
  std::set<std::string> attributes;
  std::vector<std::pair<std::string, std::vector<std::string>>> options;  // name -> values
  double price = 0.0;

  bool operator==(const Product&) const = default;
};

/// Products plus an inverted term index over titles, categories and attributes.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<Product> products);

  const std::vector<Product>& products() const noexcept { return products_; }
  const Product* find(std::string_view product_id) const;

  /// Products matching at least one query term, best first (term overlap
  /// descending, then product id).
  std::vector<const Product*> search(std::string_view query) const;

 private:
  std::vector<Product> products_;
  std::map<std::string, std::vector<std::size_t>> index_;
};

struct Requirements {
  std::string category;
  std::vector<std::string> attributes;
  std::vector<std::pair<std::string, std::string>> options;  // option name, required value
  double price_cap = 0.0;

  bool operator==(const Requirements&) const = default;
};

struct ShopTask {
  std::string task_id;
  Requirements requirements;

  bool operator==(const ShopTask&) const = default;
};

std::string instruction_text(const Requirements& req);

/// (matched attributes + matched options + price ok) / (|attributes| + |options| + 1).
double purchase_reward(const Requirements& req, const Product& product,
                       const std::map<std::string, std::string>& selected);

/// Templated queries offered on the search page, in order.
std::vector<std::string> search_queries(const Requirements& req);

struct GeneratorParams {
  int products_per_category = 8;
  int train_tasks = 50;
  int valid_tasks = 10;
  int test_tasks = 20;
  int page_size = 3;
  int max_steps = kDefaultMaxSteps;
  std::uint64_t seed = 0;
  int max_required_attributes = 2;  // per task, at least 1
  int required_options = 1;         // capped by the target product's options
};

EnvFixture generate(const GeneratorParams& params);
EnvFixture make_fixture(std::vector<Product> products, std::vector<ShopTask> tasks,
                        std::vector<Split> splits, int page_size = 3,
                        int max_steps = kDefaultMaxSteps);

nlohmann::json product_to_json(const Product& p);
Product product_from_json(const nlohmann::json& j);

class MiniShopEnv final : public Environment {
 public:
  explicit MiniShopEnv(std::shared_ptr<const EnvFixture> fixture);

  std::string_view env_id() const noexcept override { return kEnvId; }
  EnvObservation reset(const TaskSpec& task, std::uint64_t seed) override;
  ActionOutcome step(std::string_view action) override;
  std::vector<std::string> action_space() const override;
  bool terminal() const noexcept override { return terminal_; }

  const Catalog& catalog() const noexcept { return *catalog_; }

 private:
  enum class Page { Search, Results, Product };

  std::string render_search() const;
  std::string render_results() const;
  std::string render_product() const;
  std::size_t page_count() const;
  ActionOutcome invalid() const;
  ActionOutcome finish(std::string text, std::optional<double> reward);

  std::shared_ptr<const EnvFixture> fixture_;
  std::shared_ptr<const Catalog> catalog_;
  int page_size_ = 3;
  Requirements req_;
  Page page_ = Page::Search;
  std::vector<const Product*> results_;
  std::size_t results_page_ = 0;
  const Product* product_ = nullptr;
  std::map<std::string, std::string> selected_;
  int steps_taken_ = 0;
  bool started_ = false;
  bool terminal_ = false;
};

}  // namespace trajloop::minishop
