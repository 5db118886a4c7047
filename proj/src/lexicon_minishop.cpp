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

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "trajloop/environment.hpp"
#include "trajloop/lexicon.hpp"
#include "trajloop/minishop.hpp"

namespace trajloop::minishop {

namespace {

const std::vector<std::string> kActionTokens = {
    "search_full", "search_category", "click_best", "click_r1", "click_r2", "click_r3", "click_opt",
    "click_opt_other", "buy", "next", "prev", "back", "think"};

const std::vector<std::string> kObservationTokens = {
    "start", "search", "results_good", "results", "product_ready", "product", "clicked_required",
    "clicked", "bought_full", "bought_partial", "invalid", "ok", "truncated", "other"};

bool starts_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(0, p.size()) == p;
}

bool contains(std::string_view s, std::string_view p) { return s.find(p) != std::string_view::npos; }

std::vector<std::string> lines_of(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> words_of(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Listing {
  std::string pid, title;
  double price = 0.0;
};

enum class Page { Search, Results, Product, Done };

struct Belief {
  Requirements req;
  Page page = Page::Search;
  std::vector<Listing> results;
  bool has_next = false, has_prev = false;
  std::string product_id, product_title;
  double product_price = 0.0;
  std::vector<std::pair<std::string, std::vector<std::string>>> options;
  std::set<std::string> clicked;
  std::set<std::string> visited;
  double score = -1.0;

  std::size_t matches(const std::string& title) const {
    const auto ws = words_of(title);
    std::size_t n = 0;
    for (const auto& a : req.attributes) n += std::count(ws.begin(), ws.end(), a) ? 1 : 0;
    return n;
  }
  bool full(const std::string& title) const { return matches(title) == req.attributes.size(); }
  bool good(const Listing& l) const { return full(l.title) && l.price <= req.price_cap; }
  bool required(std::string_view value) const {
    for (const auto& [n, v] : req.options) {
      if (v == value) return true;
    }
    return false;
  }
  bool offered(std::string_view value) const {
    for (const auto& [n, vs] : options) {
      if (std::find(vs.begin(), vs.end(), value) != vs.end()) return true;
    }
    return false;
  }
  std::optional<std::string> pending_option() const {
    for (const auto& [n, v] : req.options) {
      if (offered(v) && !clicked.count(v)) return v;
    }
    return std::nullopt;
  }
  bool options_missing() const {
    for (const auto& [n, v] : req.options) {
      if (!offered(v)) return true;
    }
    return false;
  }
  std::optional<std::size_t> best() const {
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (good(results[i]) && !visited.count(results[i].pid)) return i;
    }
    return std::nullopt;
  }
  std::string full_query() const {
    std::string q;
    for (const auto& a : req.attributes) q += a + " ";
    return q + req.category;
  }
};

Requirements parse_instruction(std::string_view obs) {
  Requirements r;
  const auto head_at = obs.find("i am looking for a ");
  const auto tail_at = obs.find(", and price lower than ");
  if (head_at == std::string_view::npos || tail_at == std::string_view::npos) return r;
  auto head = obs.substr(head_at + 19, tail_at - head_at - 19);
  std::string_view opts;
  if (const auto w = head.find(" with "); w != std::string_view::npos) {
    opts = head.substr(w + 6);
    head = head.substr(0, w);
  }
  auto ws = words_of(head);
  ws.erase(std::remove(ws.begin(), ws.end(), "and"), ws.end());
  if (!ws.empty()) {
    r.category = ws.back();
    ws.pop_back();
  }
  r.attributes = ws;
  auto ow = words_of(opts);
  ow.erase(std::remove(ow.begin(), ow.end(), "and"), ow.end());
  for (std::size_t i = 0; i + 1 < ow.size(); i += 2) r.options.emplace_back(ow[i], ow[i + 1]);
  const auto price_at = tail_at + 23;
  r.price_cap = std::stod(std::string(obs.substr(price_at, obs.find(' ', price_at) - price_at)));
  return r;
}

void parse_results(std::string_view obs, Belief& b) {
  b.page = Page::Results;
  b.results.clear();
  b.has_next = contains(obs, "\n[Next >]");
  b.has_prev = contains(obs, "\n[< Prev]");
  const auto ls = lines_of(obs);
  for (std::size_t i = 0; i + 2 < ls.size(); ++i) {
    const auto& l = ls[i];
    if (l.size() > 2 && l.front() == '[' && l.back() == ']' && ls[i + 2].size() > 1 &&
        ls[i + 2].front() == '$') {
      b.results.push_back({l.substr(1, l.size() - 2), ls[i + 1], std::stod(ls[i + 2].substr(1))});
      i += 2;
    }
  }
}

void parse_product(std::string_view obs, std::string_view last_action, Belief& b) {
  b.page = Page::Product;
  b.options.clear();
  b.clicked.clear();
  const auto ls = lines_of(obs);
  for (std::size_t i = 2; i < ls.size(); ++i) {
    const auto& l = ls[i];
    const auto br = l.find(" [");
    if (br != std::string::npos && l.back() == ']') {
      std::vector<std::string> values;
      std::size_t pos = br + 1;
      while (pos < l.size() && l[pos] == '[') {
        const auto close = l.find(']', pos);
        values.push_back(l.substr(pos + 1, close - pos - 1));
        pos = close + 1;
      }
      b.options.emplace_back(l.substr(0, br), std::move(values));
    } else if (starts_with(l, "Price: $")) {
      b.product_price = std::stod(l.substr(8));
      b.product_title = ls[i - 1];
    }
  }
  if (starts_with(last_action, "click[") && last_action.size() > 7) {
    b.product_id = std::string(last_action.substr(6, last_action.size() - 7));
    b.visited.insert(b.product_id);
  }
}

void observe(std::string_view obs, std::string_view last_action, Belief& b) {
  if (starts_with(obs, "MiniShop\nInstruction:")) {
    b.page = Page::Search;
  } else if (starts_with(obs, "[Back to Search]\nPage ")) {
    parse_results(obs, b);
  } else if (starts_with(obs, "[Back to Search]\n[< Prev]") && contains(obs, "[Buy Now]")) {
    parse_product(obs, last_action, b);
  } else if (starts_with(obs, "You have clicked ")) {
    b.clicked.insert(std::string(obs.substr(17, obs.find('.', 17) - 17)));
  } else if (starts_with(obs, "Thank you for your purchase.")) {
    b.page = Page::Done;
    const auto at = obs.find("Your score: ");
    if (at != std::string_view::npos) b.score = std::stod(std::string(obs.substr(at + 12)));
  }
}

std::string observation_token(std::size_t t, std::string_view obs, const Belief& b) {
  if (t == 0) return "start";
  if (contains(obs, "You ran out of steps.")) return "truncated";
  if (obs == kInvalidActionText) return "invalid";
  if (obs == kThinkObservation) return "ok";
  if (starts_with(obs, "MiniShop\n")) return "search";
  if (starts_with(obs, "Thank you")) return b.score >= 1.0 ? "bought_full" : "bought_partial";
  if (starts_with(obs, "You have clicked ")) {
    return b.required(obs.substr(17, obs.find('.', 17) - 17)) ? "clicked_required" : "clicked";
  }
  if (b.page == Page::Results) return b.best() ? "results_good" : "results";
  if (b.page == Page::Product) {
    return b.full(b.product_title) && b.product_price <= b.req.price_cap && !b.options_missing()
               ? "product_ready"
               : "product";
  }
  return "other";
}

std::vector<std::string> state_features(const Belief& b) {
  std::vector<std::string> f;
  switch (b.page) {
    case Page::Search:
      f.emplace_back("page:search");
      break;
    case Page::Results: {
      f.emplace_back("page:results");
      const auto best = b.best();
      if (best) f.push_back("res:best_" + std::to_string(*best + 1));
      else f.emplace_back("res:no_good");
      if (b.results.empty()) f.emplace_back("res:empty");
      if (b.has_next) f.emplace_back("res:has_next");
      if (b.has_prev) f.emplace_back("res:has_prev");
      break;
    }
    case Page::Product:
      f.emplace_back("page:product");
      f.emplace_back(b.full(b.product_title) ? "prod:full" : "prod:partial");
      f.emplace_back(b.product_price <= b.req.price_cap ? "prod:price_ok" : "prod:price_high");
      if (b.options_missing()) f.emplace_back("prod:option_missing");
      else if (b.pending_option()) f.emplace_back("prod:option_pending");
      else f.emplace_back("prod:options_done");
      break;
    case Page::Done:
      f.emplace_back("page:done");
      break;
  }
  if (!b.visited.empty()) f.emplace_back("visited:any");
  return f;
}

std::vector<std::string> renderings(const Belief& b) {
  auto click = [](std::string_view x) { return "click[" + std::string(x) + "]"; };
  auto result = [&](std::size_t i) {
    return i < b.results.size() ? click(b.results[i].pid) : click("none");
  };
  std::string best = result(0);
  if (auto i = b.best()) {
    best = result(*i);
  } else {
    for (const auto& r : b.results) {
      if (!b.visited.count(r.pid)) {
        best = click(r.pid);
        break;
      }
    }
  }
  std::string opt = b.req.options.empty() ? click("none") : click(b.req.options.front().second);
  if (auto p = b.pending_option()) opt = click(*p);
  std::string other = click("none");
  for (const auto& [n, vs] : b.options) {
    for (const auto& v : vs) {
      if (!b.required(v) && other == click("none")) other = click(v);
    }
  }
  return {"search[" + b.full_query() + "]",
          "search[" + b.req.category + "]",
          best,
          result(0),
          result(1),
          result(2),
          opt,
          other,
          click("Buy Now"),
          click("Next >"),
          click("< Prev"),
          click("Back to Search"),
          std::string(kThinkAction)};
}

std::optional<std::string> classify(std::string_view a, const Belief& b) {
  if (is_think_action(a)) return "think";
  if (starts_with(a, "search[") && a.back() == ']') {
    return a.substr(7, a.size() - 8) == b.full_query() ? "search_full" : "search_category";
  }
  if (!starts_with(a, "click[") || a.back() != ']') return std::nullopt;
  const auto x = a.substr(6, a.size() - 7);
  if (x == "Buy Now") return "buy";
  if (x == "Next >") return "next";
  if (x == "< Prev") return "prev";
  if (x == "Back to Search") return "back";
  if (b.page == Page::Results) {
    if (auto i = b.best(); i && b.results[*i].pid == x) return "click_best";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, b.results.size()); ++i) {
      if (b.results[i].pid == x) return "click_r" + std::to_string(i + 1);
    }
  }
  if (b.required(x)) return "click_opt";
  return "click_opt_other";
}

class MiniShopLexicon final : public Lexicon {
 public:
  std::string_view env_id() const noexcept override { return kEnvId; }
  const std::vector<std::string>& action_tokens() const noexcept override { return kActionTokens; }
  const std::vector<std::string>& observation_tokens() const noexcept override {
    return kObservationTokens;
  }

  std::vector<StepAnalysis> analyze(const Transcript& tr) const override {
    std::vector<StepAnalysis> out;
    Belief b;
    if (!tr.steps.empty()) b.req = parse_instruction(tr.steps.front().observation);
    std::string prev = "none";
    std::string last_action;
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
      const auto& s = tr.steps[t];
      observe(s.observation, last_action, b);
      StepAnalysis a;
      a.observation_token = observation_token(t, s.observation, b);
      a.features = state_features(b);
      a.features.push_back("obs:" + a.observation_token);
      a.features.push_back("prev:" + prev);
      a.renderings = renderings(b);
      if (s.action) a.action_token = classify(*s.action, b);
      if (s.reasoning) {
        const auto named = reasoning_action(*s.reasoning);
        const auto cls = named ? classify(*named, b) : std::nullopt;
        a.reason_token = cls ? std::string(kReasonPrefix) + *cls : std::string(kReasonOther);
      }
      prev = a.action_token.value_or("unknown");
      last_action = s.action.value_or("");
      out.push_back(std::move(a));
    }
    return out;
  }

  std::vector<PriorRule> prior_rules() const override {
    return {{"page:search", "search_full", 2.0},         {"res:best_1", "click_best", 2.0},
            {"res:best_2", "click_best", 2.0},           {"res:best_3", "click_best", 2.0},
            {"res:no_good", "next", 1.0},                {"prod:option_pending", "click_opt", 2.0},
            {"prod:options_done", "buy", 2.0},           {"prod:option_missing", "prev", 1.0},
            {"prod:partial", "prev", 1.0}};
  }

  std::string goal_phrase(const Transcript& tr) const override {
    Requirements r;
    if (!tr.steps.empty()) r = parse_instruction(tr.steps.front().observation);
    std::string what;
    for (const auto& a : r.attributes) what += a + " ";
    what += r.category;
    for (const auto& [n, v] : r.options) what += " in " + v;
    return "I need a " + what + " under the price limit";
  }
};

}  // namespace

std::shared_ptr<const Lexicon> make_lexicon() { return std::make_shared<MiniShopLexicon>(); }

}  // namespace trajloop::minishop
