// Copyright 2026 The kgtl Authors.
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

#include "kgtl/actspace.hpp"

#include <algorithm>
#include <set>

#include "kgtl/common.hpp"

namespace kgtl::act {

std::vector<std::string> ActionSet::texts() const {
  std::vector<std::string> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(a.text);
  return out;
}

bool ActionSet::contains(const std::string& text) const {
  for (const auto& a : actions)
    if (a.text == text) return true;
  return false;
}

ActionSet fill_templates(const std::vector<ActionTemplate>& templates,
                         const std::vector<std::string>& objects) {
  ActionSet out;
  if (templates.empty()) return out;
  KGTL_REQUIRE(!objects.empty(), "object set is empty");
  for (const auto& t : templates) {
    const int slots = t.slots();
    KGTL_REQUIRE(slots >= 1 && slots <= 2, "template must have one or two OBJ slots: " + t.pattern);
    const auto words = split(t.pattern, ' ');
    std::vector<Action> partial{{}};
    for (const auto& w : words) {
      if (w != "OBJ") {
        for (auto& p : partial) p.text += (p.text.empty() ? "" : " ") + w;
        continue;
      }
      std::vector<Action> next;
      next.reserve(partial.size() * objects.size());
      for (const auto& p : partial)
        for (const auto& o : objects) {
          Action a = p;
          a.text += (a.text.empty() ? "" : " ") + o;
          a.objects.push_back(o);
          next.push_back(std::move(a));
        }
      partial = std::move(next);
    }
    for (auto& a : partial) out.actions.push_back(std::move(a));
  }
  std::sort(out.actions.begin(), out.actions.end(),
            [](const Action& a, const Action& b) { return a.text < b.text; });
  // Distinct templates can collide only if their patterns collide; keep the first.
  out.actions.erase(std::unique(out.actions.begin(), out.actions.end(),
                                [](const Action& a, const Action& b) { return a.text == b.text; }),
                    out.actions.end());
  return out;
}

ActionSet full_action_set(const engine::GameSpec& spec) {
  return fill_templates(spec.templates, spec.object_names());
}

namespace {

// Objects the player holds or that sit in the player's room, directly or
// inside something that does.
std::set<std::string> local_objects(const kg::KnowledgeGraph& graph) {
  std::set<std::string> local;
  const auto here = graph.player_location();
  for (const auto& t : graph.triples())
    if (t.subject == kg::kPlayer && t.relation == kg::rel::kHave) local.insert(t.object);
  if (!here) return local;
  std::set<std::string> frontier{*here};
  for (int depth = 0; depth < 2; ++depth) {
    std::set<std::string> next;
    for (const auto& t : graph.triples())
      if (t.relation == kg::rel::kLocatedIn && frontier.count(t.object) && t.subject != kg::kPlayer)
        next.insert(t.subject);
    local.insert(next.begin(), next.end());
    frontier = std::move(next);
  }
  return local;
}

struct Scorer {
  const kg::KnowledgeGraph& graph;
  kg::Adjacency adj;
  std::set<std::string> local;
  std::set<std::string> held;
  std::set<std::pair<std::string, std::string>> edges;  // (subject, object)
  bool has_player;

  explicit Scorer(const kg::KnowledgeGraph& g)
      : graph(g), adj(g), local(local_objects(g)), has_player(g.has_node(kg::kPlayer)) {
    for (const auto& t : g.triples()) {
      if (t.subject == kg::kPlayer && t.relation == kg::rel::kHave) held.insert(t.object);
      edges.emplace(t.subject, t.object);
    }
  }

  // A triple whose subject fills the last slot and whose object fills the
  // first, e.g. <key, can-unlock, chest> for "unlock chest with key".
  bool directed(const std::string& first, const std::string& last) const {
    return first != last && edges.count({last, first}) != 0;
  }

  int locality(const Action& a) const {
    for (const auto& o : a.objects)
      if (!local.count(o)) return 0;
    if (a.objects.size() == 1 || directed(a.objects[0], a.objects[1])) return 3;
    if (a.objects[0] != a.objects[1] && (held.count(a.objects[0]) || held.count(a.objects[1]))) return 2;
    return 0;
  }

  int operator()(const Action& a) const {
    int present = 0;
    for (const auto& o : a.objects) present += adj.has_node(o) ? 1 : 0;
    if (present == 0) return 0;
    int score = present;
    if (present == static_cast<int>(a.objects.size())) {
      bool linked = true;
      for (std::size_t i = 0; i < a.objects.size() && linked; ++i)
        for (std::size_t j = i + 1; j < a.objects.size() && linked; ++j)
          linked = adj.distance(a.objects[i], a.objects[j], 2) <= 2;
      if (linked) score += 1;
      if (has_player) score += locality(a);
    }
    return score;
  }
};

}  // namespace

int action_score(const kg::KnowledgeGraph& graph, const Action& action) {
  return Scorer(graph)(action);
}

ActionSet prune_actions(const kg::KnowledgeGraph& graph, const ActionSet& full, int k) {
  KGTL_REQUIRE(k >= 1, "prune width must be at least 1");
  ActionSet out;
  out.origin = Origin::kPruned;
  Scorer score(graph);
  std::vector<std::pair<int, const Action*>> ranked;
  for (const auto& a : full.actions) {
    const int s = score(a);
    if (s > 0) ranked.emplace_back(s, &a);
  }
  if (ranked.empty()) {
    std::vector<const Action*> all;
    for (const auto& a : full.actions) all.push_back(&a);
    std::sort(all.begin(), all.end(), [](auto* x, auto* y) { return x->text < y->text; });
    for (std::size_t i = 0; i < all.size() && static_cast<int>(i) < k; ++i) out.actions.push_back(*all[i]);
    return out;
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    if (x.second->objects.size() != y.second->objects.size())
      return x.second->objects.size() < y.second->objects.size();
    return x.second->text < y.second->text;
  });
  // Actions with the same bag of words ("put a in b", "put b in a") encode
  // identically, so only the best-ranked one is kept.
  std::set<std::vector<std::string>> bags;
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(out.actions.size()) < k; ++i) {
    auto bag = tokenize(ranked[i].second->text);
    std::sort(bag.begin(), bag.end());
    if (bags.insert(std::move(bag)).second) out.actions.push_back(*ranked[i].second);
  }
  return out;
}

std::vector<std::string> known_exits(const kg::KnowledgeGraph& graph) {
  std::vector<std::string> out;
  const auto here = graph.player_location();
  if (!here) return out;
  std::set<std::string> dirs;
  for (const auto& t : graph.triples())
    if (t.subject == *here && t.relation.rfind(kg::rel::kConnectsPrefix, 0) == 0)
      dirs.insert(t.relation.substr(kg::rel::kConnectsPrefix.size()));
  for (const auto& d : dirs) out.push_back("go " + d);
  return out;
}

std::vector<std::string> candidate_actions(const kg::KnowledgeGraph& graph, const ActionSet& full,
                                           int k) {
  std::set<std::string> all;
  for (auto& e : known_exits(graph)) all.insert(std::move(e));
  for (const auto& a : prune_actions(graph, full, k).actions) all.insert(a.text);
  return {all.begin(), all.end()};
}

std::vector<std::string> exploration_actions(const ActionSet& full) {
  std::set<std::string> all;
  for (auto& n : engine::navigation_commands()) all.insert(std::move(n));
  for (const auto& a : full.actions) all.insert(a.text);
  return {all.begin(), all.end()};
}

}  // namespace kgtl::act
