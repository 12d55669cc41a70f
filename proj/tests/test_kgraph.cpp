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
#include <set>
#include <tuple>

#include "kgtl/common.hpp"
#include "kgtl/engine.hpp"
#include "kgtl/kgraph.hpp"

using namespace kgtl;
using namespace kgtl::kg;

namespace {

using Key = std::tuple<std::string, std::string, std::string>;

std::set<Key> keys(const std::vector<Triple>& ts) {
  std::set<Key> out;
  for (const auto& t : ts) out.insert({t.subject, t.relation, t.object});
  return out;
}

std::set<Key> keys(const KnowledgeGraph& g) { return keys(g.triples()); }

int player_locations(const KnowledgeGraph& g) {
  int n = 0;
  for (const auto& t : g.triples()) n += t.subject == kPlayer && t.relation == rel::kLocatedIn;
  return n;
}

Triple obs(std::string s, std::string r, std::string o) {
  return {std::move(s), std::move(r), std::move(o), Provenance::kObserved};
}

Triple seeded(std::string s, std::string r, std::string o) {
  return {std::move(s), std::move(r), std::move(o), Provenance::kSeeded};
}

// Random observed triples over a small closed world.
std::vector<Triple> random_batch(Rng& rng) {
  static const std::vector<std::string> things = {"key", "sock", "knife", "chest", "lamp"};
  static const std::vector<std::string> rooms = {"kitchen", "hall", "attic"};
  std::vector<Triple> batch;
  const std::size_t n = 1 + rng.index(3);
  for (std::size_t i = 0; i < n; ++i) {
    switch (rng.index(4)) {
      case 0:
        batch.push_back(obs("you", "located-in", rooms[rng.index(rooms.size())]));
        break;
      case 1:
        batch.push_back(obs("you", "have", things[rng.index(things.size())]));
        break;
      case 2:
        batch.push_back(obs(things[rng.index(things.size())], "located-in", rooms[rng.index(rooms.size())]));
        break;
      default:
        batch.push_back(obs(rooms[rng.index(rooms.size())], "connects-north", rooms[rng.index(rooms.size())]));
        break;
    }
  }
  return batch;
}

}  // namespace

TEST_CASE("room, object and exit sentences") {
  engine::Observation o{"You are in the kitchen. There is a knife here. Exits: north.", {}};
  CHECK(keys(extract_triples(o, "kitchen")) == std::set<Key>{{"you", "located-in", "kitchen"},
                                                           {"knife", "located-in", "kitchen"},
                                                           {"kitchen", "connects-north", "?unknown"}});
}

TEST_CASE("empty text yields nothing") {
  CHECK(extract_triples(engine::Observation{}, "kitchen").empty());
  CHECK(extract_text("", "", Provenance::kSeeded).empty());
  CHECK(extract_text("Colourless green ideas sleep furiously.", "hall", Provenance::kObserved).empty());
}

TEST_CASE("inventory, attribute and affordance sentences") {
  const auto t = keys(extract_text("You have a brass key. The chest is locked. A key can open a chest.", "hall",
                                   Provenance::kObserved));
  CHECK(t == std::set<Key>{{"you", "have", "brass key"},
                           {"chest", "is", "locked"},
                           {"key", "can-open", "chest"}});
}

TEST_CASE("events add movement and possession") {
  engine::Observation o;
  o.text = "You are in the hall.";
  engine::Event moved;
  moved.kind = engine::EventKind::kMoved;
  moved.from = "kitchen";
  moved.to = "hall";
  moved.direction = "north";
  engine::Event took;
  took.kind = engine::EventKind::kTook;
  took.subject = "key";
  o.events = {moved, took};
  const auto t = keys(extract_triples(o, "kitchen"));
  CHECK(t.count({"kitchen", "connects-north", "hall"}));
  CHECK(t.count({"hall", "connects-south", "kitchen"}));
  CHECK(t.count({"you", "have", "key"}));
  CHECK(t.count({"you", "located-in", "hall"}));
}

TEST_CASE("moving replaces the player location") {
  KnowledgeGraph g = update_graph({}, {obs("you", "located-in", "kitchen")});
  g = update_graph(g, {obs("you", "located-in", "hall")});
  CHECK(player_locations(g) == 1);
  CHECK(g.contains("you", "located-in", "hall"));
  CHECK(g.player_location() == "hall");
}

TEST_CASE("taking an object removes its observed location only") {
  KnowledgeGraph g = update_graph({}, {obs("key", "located-in", "kitchen")});
  g = seed(g, KnowledgeGraph({seeded("key", "located-in", "drawer")}));
  g = update_graph(g, {obs("you", "have", "key")});
  CHECK_FALSE(g.contains("key", "located-in", "kitchen"));
  CHECK(g.contains("key", "located-in", "drawer"));
  CHECK(g.contains("you", "have", "key"));
}

TEST_CASE("empty update and repeated update are identities") {
  const std::vector<Triple> batch = {obs("you", "located-in", "kitchen"), obs("knife", "located-in", "kitchen")};
  const KnowledgeGraph once = update_graph({}, batch);
  CHECK(update_graph(once, {}) == once);
  CHECK(update_graph(once, batch) == once);
}

TEST_CASE("affordance sentence from a guide") {
  const KnowledgeGraph g = seed_graph_from_guide("A key can open a lock.");
  REQUIRE(g.size() == 1);
  CHECK(g.triples()[0] == seeded("key", "can-open", "lock"));
}

TEST_CASE("unrelated guide sentences give two components") {
  const KnowledgeGraph g = seed_graph_from_guide("A key can open a lock. A knife can cut bread.");
  CHECK(g.size() == 2);
  CHECK(g.component_count() == 2);
}

TEST_CASE("guides carry no map or player facts") {
  const KnowledgeGraph g =
      seed_graph_from_guide("You are in the kitchen. Exits: north. There is a key here. A lamp is bright.");
  for (const auto& t : g.triples()) {
    CHECK(t.provenance == Provenance::kSeeded);
    CHECK(t.subject != kPlayer);
    CHECK(t.relation.rfind("connects-", 0) != 0);
  }
  CHECK(g.contains("lamp", "is", "bright"));
}

TEST_CASE("40-sentence guide fixture matches the hand annotation") {
  const KnowledgeGraph g = seed_graph_from_guide_file(std::string(KGTL_FIXTURE_DIR) + "/house_guide_40.txt");
  const std::set<Key> gold = {
      {"key", "can-unlock", "chest"},       {"key", "can-unlock", "drawer"},
      {"brass key", "can-unlock", "trunk"}, {"chest", "can-hold", "apple"},
      {"drawer", "can-hold", "spoon"},      {"cupboard", "can-hold", "mug"},
      {"knife", "can-cut", "apple"},        {"candle", "can-light", "room"},
      {"match", "can-burn", "letter"},      {"coat", "can-protect", "guest"},
      {"person", "can-read", "book"},       {"small key", "can-open", "toolbox"},
      {"crowbar", "can-open", "crate"},     {"stove", "part-of", "kitchen"},
      {"sink", "part-of", "kitchen"},       {"bed", "part-of", "bedroom"},
      {"mirror", "part-of", "bathroom"},    {"key", "is", "small"},
      {"candle", "is", "tidy"},             {"blanket", "is", "woolen"},
      {"towels", "is", "clean"},            {"fridge", "is", "cold"},
      {"lamp", "can-light", "hall"},        {"wardrobe", "can-hold", "coat"},
      {"hammer", "can-fit", "toolbox"},     {"guest", "can-wear", "hat"},
      {"cellar", "is", "dark"},             {"toolbox", "can-contain", "hammer"},
  };
  CHECK(gold.size() == 28);
  CHECK(g.size() == 28);
  CHECK(keys(g) == gold);
}

TEST_CASE("seeding is an idempotent union") {
  const KnowledgeGraph s = seed_graph_from_guide("A key can open a lock. A lamp is bright.");
  CHECK(seed(KnowledgeGraph{}, s) == s);
  const KnowledgeGraph once = seed(update_graph({}, {obs("you", "located-in", "hall")}), s);
  CHECK(seed(once, s) == once);
  CHECK_THROWS_AS(seed({}, KnowledgeGraph({obs("a", "is", "b")})), Error);
}

TEST_CASE("seeded triples survive 100 random updates") {
  const KnowledgeGraph s({seeded("key", "located-in", "kitchen"), seeded("key", "can-open", "chest"),
                          seeded("sock", "located-in", "hall")});
  KnowledgeGraph g = seed({}, s);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    g = update_graph(g, random_batch(rng));
    for (const auto& t : s.triples()) REQUIRE(g.find(t.subject, t.relation, t.object) != nullptr);
    REQUIRE(player_locations(g) <= 1);
  }
}

TEST_CASE("triples disappear only through the two replacement rules") {
  KnowledgeGraph g;
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto batch = random_batch(rng);
    const KnowledgeGraph next = update_graph(g, batch);
    std::set<std::string> held;
    bool moved = false;
    for (const auto& t : batch) {
      if (t.subject == kPlayer && t.relation == rel::kHave) held.insert(t.object);
      if (t.subject == kPlayer && t.relation == rel::kLocatedIn) moved = true;
    }
    for (const auto& t : g.triples()) {
      if (next.find(t.subject, t.relation, t.object)) continue;
      const bool relocation = moved && t.subject == kPlayer && t.relation == rel::kLocatedIn;
      const bool taken = t.relation == rel::kLocatedIn && held.count(t.subject);
      CHECK((relocation || taken));
    }
    g = next;
  }
}

TEST_CASE("oracle replay reconstructs exits of visited rooms") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto theme = seed % 2 ? engine::Theme::kHaunt : engine::Theme::kHouse;
    const engine::Game game(engine::generate_game(theme, seed, 8, 5, 1.0));
    const auto& spec = game.spec();
    const auto trace = game.oracle_walkthrough();

    std::set<int> visited;
    auto [s, o] = game.reset();
    visited.insert(s.room);
    for (const auto& st : trace.steps) {
      s = game.step(s, st.action).state;
      visited.insert(s.room);
    }

    std::set<std::pair<std::string, std::string>> expected;
    for (int r : visited)
      for (int d = 0; d < engine::kNumDirections; ++d)
        if (spec.rooms[r].exits[d] >= 0)
          expected.insert({normalize_entity(spec.rooms[r].name),
                           std::string(engine::direction_name(static_cast<engine::Direction>(d)))});

    std::set<std::pair<std::string, std::string>> got;
    const KnowledgeGraph g = graph_from_walkthrough(trace);
    for (const auto& t : g.triples()) {
      if (t.relation.rfind("connects-", 0) != 0) continue;
      const std::string dir = t.relation.substr(9);
      got.insert({t.subject, dir});
      if (t.object == kUnknownNode) continue;
      // Soundness: a named destination is the true neighbour.
      const int from = spec.find_room(t.subject);
      REQUIRE(from >= 0);
      const int d = static_cast<int>(*engine::parse_direction(dir));
      CHECK(spec.rooms[spec.rooms[from].exits[d]].name == t.object);
    }
    CHECK(got == expected);
  }
}

TEST_CASE("tsv round trip and format errors") {
  const KnowledgeGraph g({obs("you", "located-in", "kitchen"), seeded("key", "can-open", "chest")});
  CHECK(KnowledgeGraph::from_tsv(g.to_tsv()) == g);
  CHECK(g.to_tsv() == "key\tcan-open\tchest\tseeded\nyou\tlocated-in\tkitchen\tobserved\n");
  CHECK_THROWS_AS(KnowledgeGraph::from_tsv("a\tlikes\tb\tobserved\n"), Error);
  CHECK_THROWS_AS(KnowledgeGraph::from_tsv("a\tis\n"), Error);
}

TEST_CASE("adjacency distances ignore direction") {
  const KnowledgeGraph g({obs("key", "located-in", "kitchen"), obs("kitchen", "connects-north", "hall"),
                          obs("sock", "located-in", "attic")});
  const Adjacency adj(g);
  CHECK(adj.distance("key", "kitchen", 2) == 1);
  CHECK(adj.distance("hall", "key", 2) == 2);
  CHECK(adj.distance("key", "sock", 2) == 3);
  CHECK(adj.distance("key", "ghost", 2) == 3);
}
