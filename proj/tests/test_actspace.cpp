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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "kgtl/actspace.hpp"
#include "kgtl/common.hpp"
#include "kgtl/engine.hpp"
#include "kgtl/kgraph.hpp"

using namespace kgtl;
using namespace kgtl::act;
using kg::KnowledgeGraph;
using kg::Provenance;
using kg::Triple;

namespace {

Triple obs(std::string s, std::string r, std::string o) {
  return {std::move(s), std::move(r), std::move(o), Provenance::kObserved};
}

ActionTemplate tmpl(std::string pattern) {
  const std::string verb = split(pattern, ' ')[0];
  return {std::move(pattern), verb};
}

Action action(const ActionSet& set, const std::string& text) {
  for (const auto& a : set.actions)
    if (a.text == text) return a;
  FAIL("missing action " << text);
  return {};
}

std::size_t expected_count(const engine::GameSpec& spec) {
  std::size_t n = 0;
  for (const auto& t : spec.templates)
    n += static_cast<std::size_t>(std::pow(spec.objects.size(), t.slots()));
  return n;
}

// Graph seen part-way through the oracle trace.
KnowledgeGraph partial_graph(const engine::Game& game, std::size_t steps) {
  engine::Walkthrough w = game.oracle_walkthrough();
  if (steps < w.steps.size()) {
    w.final_observation = w.steps[steps].observation;
    w.steps.resize(steps);
  }
  return kg::graph_from_walkthrough(w);
}

KnowledgeGraph random_graph(Rng& rng, const std::vector<std::string>& names) {
  static const std::vector<std::string> rels = {"located-in", "is", "can-open", "part-of", "have"};
  std::vector<Triple> ts;
  bool placed = false;
  const std::size_t n = rng.index(8);
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = rng.bernoulli(0.2) ? "you" : names[rng.index(names.size())];
    const std::string& r = rels[rng.index(rels.size())];
    if (s == "you" && r == "located-in") {
      if (placed) continue;
      placed = true;
    }
    ts.push_back(obs(s, r, names[rng.index(names.size())]));
  }
  return KnowledgeGraph(std::move(ts));
}

}  // namespace

TEST_CASE("two templates over three objects give twelve actions") {
  const auto set = fill_templates({tmpl("take OBJ"), tmpl("place OBJ in OBJ")}, {"a", "b", "c"});
  CHECK(set.size() == 12);
  CHECK(set.contains("place a in a"));
  CHECK(set.contains("take c"));
  auto texts = set.texts();
  CHECK(std::is_sorted(texts.begin(), texts.end()));
  CHECK(action(set, "place b in c").objects == std::vector<std::string>{"b", "c"});
}

TEST_CASE("a single object gives one action per template") {
  const auto set = fill_templates({tmpl("take OBJ"), tmpl("open OBJ"), tmpl("put OBJ in OBJ")}, {"key"});
  CHECK(set.texts() == std::vector<std::string>{"open key", "put key in key", "take key"});
}

TEST_CASE("empty template list gives an empty set") {
  CHECK(fill_templates({}, {"a"}).empty());
  CHECK_THROWS_AS(fill_templates({tmpl("take OBJ")}, {}), Error);
  CHECK_THROWS_AS(fill_templates({tmpl("look")}, {"a"}), Error);
}

TEST_CASE("full set size equals the template sum on 10 specs") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto spec = engine::generate_game(seed % 2 ? engine::Theme::kHaunt : engine::Theme::kHouse, seed,
                                            4 + static_cast<int>(seed % 5), 3, 1.0);
    const auto full = full_action_set(spec);
    CHECK(full.size() == expected_count(spec));
    // Order of the action space: at most |V| * |O|^2 with one template per verb.
    std::set<std::string> verbs;
    for (const auto& t : spec.templates) verbs.insert(t.verb);
    if (verbs.size() == spec.templates.size()) {
      const double o = static_cast<double>(spec.objects.size());
      CHECK(static_cast<double>(full.size()) <= spec.vocabulary.size() * o * o);
    }
  }
}

TEST_CASE("presence rule keeps actions on graph objects") {
  const KnowledgeGraph g({obs("knife", "located-in", "kitchen")});
  ActionSet full;
  full.actions = {{"take ghost", {"ghost"}}, {"take knife", {"knife"}}};
  CHECK(prune_actions(g, full, 5).texts() == std::vector<std::string>{"take knife"});
}

TEST_CASE("connected objects outrank unconnected ones") {
  const KnowledgeGraph g({obs("key", "can-open", "chest"), obs("sock", "is", "red")});
  const auto full = fill_templates({tmpl("unlock OBJ with OBJ")}, {"chest", "key", "sock"});
  CHECK(action_score(g, action(full, "unlock chest with key")) == 3);
  CHECK(action_score(g, action(full, "unlock chest with sock")) == 2);
  const auto texts = prune_actions(g, full, 40).texts();
  const auto pos = [&](const std::string& t) { return std::find(texts.begin(), texts.end(), t) - texts.begin(); };
  CHECK(pos("unlock chest with key") < pos("unlock chest with sock"));
}

TEST_CASE("empty graph falls back to the first k actions") {
  const auto full = fill_templates({tmpl("take OBJ"), tmpl("put OBJ in OBJ")}, {"a", "b", "c"});
  const auto pruned = prune_actions(KnowledgeGraph{}, full, 4);
  CHECK(pruned.texts() == std::vector<std::string>{"put a in a", "put a in b", "put a in c", "put b in a"});
  CHECK(pruned.origin == Origin::kPruned);
  CHECK_THROWS_AS(prune_actions(KnowledgeGraph{}, full, 0), Error);
}

TEST_CASE("pruned sets are bounded subsets on 10 specs") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const engine::Game game(engine::generate_game(engine::Theme::kHouse, seed, 6, 4, 1.0));
    const auto full = full_action_set(game.spec());
    const auto texts = full.texts();
    const std::set<std::string> all(texts.begin(), texts.end());
    for (std::size_t steps = 0; steps <= 4; ++steps) {
      const auto g = partial_graph(game, steps);
      for (int k : {1, 5, 40, 100000}) {
        const auto pruned = prune_actions(g, full, k);
        CHECK(static_cast<int>(pruned.size()) <= k);
        std::set<std::string> seen;
        for (const auto& t : pruned.texts()) {
          CHECK(all.count(t));
          CHECK(seen.insert(t).second);
        }
      }
    }
  }
}

TEST_CASE("adding a triple never lowers the score of actions on its objects") {
  const std::vector<std::string> names = {"you", "key", "chest", "sock", "kitchen", "hall"};
  const auto full =
      fill_templates({tmpl("take OBJ"), tmpl("unlock OBJ with OBJ"), tmpl("put OBJ in OBJ")}, {"key", "chest", "sock"});
  Rng rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const KnowledgeGraph g = random_graph(rng, names);
    std::string s = rng.bernoulli(0.3) ? "you" : names[rng.index(names.size())];
    const std::vector<std::string> rels = {"located-in", "is", "can-open", "have"};
    Triple extra = obs(s, rels[rng.index(rels.size())], names[rng.index(names.size())]);
    // Graphs hold at most one player location.
    if (extra.subject == "you" && extra.relation == "located-in" && g.player_location()) continue;
    std::vector<Triple> more = g.triples();
    more.push_back(extra);
    const KnowledgeGraph h(std::move(more));
    for (const auto& a : full.actions) {
      const bool mentions = std::find(a.objects.begin(), a.objects.end(), extra.subject) != a.objects.end() ||
                            std::find(a.objects.begin(), a.objects.end(), extra.object) != a.objects.end();
      if (!mentions) continue;
      if (action_score(h, a) < action_score(g, a)) {
        FAIL_CHECK("score dropped for " << a.text << " after adding " << extra.subject << " " << extra.relation
                                        << " " << extra.object);
      }
    }
  }
}

TEST_CASE("picking up a second object keeps the two-object score") {
  const KnowledgeGraph g({obs("you", "located-in", "kitchen"), obs("key", "located-in", "kitchen"),
                          obs("you", "have", "chest")});
  std::vector<Triple> more = g.triples();
  more.push_back(obs("you", "have", "key"));
  const KnowledgeGraph h(std::move(more));
  const Action a{"put key in chest", {"key", "chest"}};
  CHECK(action_score(h, a) >= action_score(g, a));
}

TEST_CASE("seeding never lowers scores") {
  const auto guide = kg::seed_graph_from_guide_file(std::string(KGTL_DATA_ROOT) + "/guides/house_guide.txt");
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const engine::Game game(engine::generate_game(engine::Theme::kHouse, seed, 6, 4, 1.0));
    const auto full = full_action_set(game.spec());
    for (std::size_t steps : {0u, 2u}) {
      const auto g = partial_graph(game, steps);
      const auto seeded = kg::seed(g, guide);
      for (const auto& a : full.actions) CHECK(action_score(seeded, a) >= action_score(g, a));
    }
    for (const auto& a : full.actions) {
      bool all_in_seed = true;
      for (const auto& o : a.objects) all_in_seed = all_in_seed && guide.has_node(o);
      if (all_in_seed) CHECK(action_score(guide, a) >= action_score(KnowledgeGraph{}, a));
    }
  }
}

TEST_CASE("objects at hand outrank objects elsewhere") {
  const KnowledgeGraph g({obs("you", "located-in", "kitchen"), obs("key", "located-in", "kitchen"),
                          obs("sock", "located-in", "hall"), obs("kitchen", "connects-north", "hall")});
  const auto full = fill_templates({tmpl("take OBJ")}, {"key", "sock"});
  CHECK(action_score(g, action(full, "take key")) > action_score(g, action(full, "take sock")));
  CHECK(prune_actions(g, full, 1).texts() == std::vector<std::string>{"take key"});
}

TEST_CASE("actions with the same words are kept once") {
  const KnowledgeGraph g({obs("apple", "located-in", "chest")});
  const auto full = fill_templates({tmpl("put OBJ in OBJ")}, {"apple", "chest"});
  const auto texts = prune_actions(g, full, 40).texts();
  CHECK(std::count(texts.begin(), texts.end(), "put apple in chest") +
            std::count(texts.begin(), texts.end(), "put chest in apple") ==
        1);
}

TEST_CASE("known exits and candidate actions") {
  const KnowledgeGraph g({obs("you", "located-in", "kitchen"), obs("kitchen", "connects-north", "?unknown"),
                          obs("kitchen", "connects-west", "hall"), obs("hall", "connects-east", "kitchen"),
                          obs("key", "located-in", "kitchen")});
  CHECK(known_exits(g) == std::vector<std::string>{"go north", "go west"});
  const auto full = fill_templates({tmpl("take OBJ")}, {"key"});
  CHECK(candidate_actions(g, full, 40) == std::vector<std::string>{"go north", "go west", "take key"});
  CHECK(known_exits(KnowledgeGraph{}).empty());
  const auto explore = exploration_actions(full);
  CHECK(explore.size() == engine::navigation_commands().size() + 1);
}
