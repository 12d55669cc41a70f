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

#include <deque>
#include <map>
#include <set>
#include <unordered_map>

#include "kgtl/common.hpp"
#include "kgtl/engine.hpp"

using namespace kgtl;
using namespace kgtl::engine;

namespace {

// Breadth-first search over states reached through Game::step alone, so it
// shares nothing with the engine's distance table.
int bfs_solution_length(const Game& g) {
  auto [start, obs] = g.reset();
  std::unordered_map<std::string, int> seen{{start.key(), 0}};
  std::deque<GameState> queue{start};
  while (!queue.empty()) {
    GameState s = queue.front();
    queue.pop_front();
    const int d = seen[s.key()];
    for (const auto& cmd : g.command_set()) {
      StepResult r = g.step(s, cmd);
      if (r.done) return d + 1;
      if (seen.emplace(r.state.key(), d + 1).second) queue.push_back(r.state);
    }
  }
  return -1;
}

int bfs_distance_from(const Game& g, const GameState& from) {
  if (from.done) return 0;
  std::unordered_map<std::string, int> seen{{from.key(), 0}};
  std::deque<GameState> queue{from};
  while (!queue.empty()) {
    GameState s = queue.front();
    queue.pop_front();
    const int d = seen[s.key()];
    for (const auto& cmd : g.command_set()) {
      StepResult r = g.step(s, cmd);
      if (r.done) return d + 1;
      if (seen.emplace(r.state.key(), d + 1).second) queue.push_back(r.state);
    }
  }
  return -1;
}

std::vector<ActionTemplate> templates_of_generated() {
  return generate_game(Theme::kHouse, 1, 2, 1, 1.0).templates;
}

// One room, the given takeable objects, quest: take the first one.
GameSpec tiny_spec(const std::vector<std::string>& objects) {
  GameSpec s;
  s.theme = Theme::kHouse;
  s.rooms = {Room{"kitchen", {-1, -1, -1, -1}}};
  for (const auto& name : objects) {
    GameObject o;
    o.name = name;
    o.initial = Location::room(0);
    o.takeable = true;
    s.objects.push_back(o);
  }
  QuestStep q;
  q.kind = StepKind::kTake;
  q.action = "take " + objects[0];
  q.room = 0;
  q.object = 0;
  s.quest = {q};
  s.templates = templates_of_generated();
  s.vocabulary = compute_vocabulary(s);
  return s;
}

}  // namespace

TEST_CASE("house game with 10 rooms and a 5-step quest") {
  const GameSpec spec = generate_game(Theme::kHouse, 7, 10, 5, 1.0);
  CHECK(spec.rooms.size() == 10);
  const Game g(spec);
  CHECK(g.oracle_walkthrough().steps.size() == 5);
}

TEST_CASE("generation is deterministic") {
  CHECK(spec_to_json(generate_game(Theme::kHouse, 7, 10, 5, 1.0)) ==
        spec_to_json(generate_game(Theme::kHouse, 7, 10, 5, 1.0)));
  CHECK(spec_to_json(generate_game(Theme::kHouse, 7, 10, 5, 1.0)) !=
        spec_to_json(generate_game(Theme::kHouse, 8, 10, 5, 1.0)));
}

TEST_CASE("invalid generation arguments are rejected") {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInternal;
  };
  CHECK(code_of([] { generate_game(Theme::kHouse, 7, 10, 0, 1.0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { generate_game(Theme::kHouse, 7, 0, 5, 1.0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { generate_game(Theme::kHouse, 7, 10, 5, 0.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("reset describes the start room and is deterministic") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Game g(generate_game(Theme::kHouse, seed, 6, 3, 1.0));
    auto [s1, o1] = g.reset();
    auto [s2, o2] = g.reset();
    CHECK_FALSE(s1.done);
    CHECK(s1.quest_index == 0);
    CHECK(s1.steps_taken == 0);
    CHECK(s1 == s2);
    CHECK(o1 == o2);
    const std::string& room = g.spec().rooms[g.spec().start_room].name;
    CHECK(o1.text.find("You are in the " + room + ".") != std::string::npos);
  }
}

TEST_CASE("on-path actions earn +1 and nonsense changes nothing") {
  const Game g(generate_game(Theme::kHouse, 3, 6, 4, 1.0));
  auto [s, o] = g.reset();
  const auto trace = g.oracle_walkthrough();
  StepResult r = g.step(s, trace.steps[0].action);
  CHECK(r.reward == 1.0);
  StepResult bad = g.step(s, "eat door");
  CHECK(bad.reward == 0.0);
  CHECK(bad.state.key() == s.key());
  CHECK(bad.observation.text.rfind(std::string(kUnrecognisedVerb), 0) == 0);
}

TEST_CASE("moving away and back gives -1 then +1 against BFS distances") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30 && checked < 5; ++seed) {
    const Game g(generate_game(Theme::kHouse, seed, 6, 3, 1.0));
    auto [s, o] = g.reset();
    const int d0 = bfs_distance_from(g, s);
    for (int dir = 0; dir < kNumDirections; ++dir) {
      const int to = g.spec().rooms[s.room].exits[dir];
      if (to < 0) continue;
      StepResult away = g.step(s, "go " + std::string(direction_name(static_cast<Direction>(dir))));
      const int d1 = bfs_distance_from(g, away.state);
      if (d1 != d0 + 1) continue;
      CHECK(away.reward == -1.0);
      StepResult back =
          g.step(away.state, "go " + std::string(direction_name(opposite(static_cast<Direction>(dir)))));
      CHECK(bfs_distance_from(g, back.state) == d0);
      CHECK(back.reward == 1.0);
      ++checked;
      break;
    }
  }
  CHECK(checked == 5);
}

TEST_CASE("oracle trace has quest_len actions and completes the game") {
  for (int q = 1; q <= 6; ++q) {
    const GameSpec spec = generate_game(Theme::kHouse, 11, 8, q, 1.0);
    const Game g(spec);
    const auto trace = g.oracle_walkthrough();
    CHECK(trace.steps.size() == static_cast<std::size_t>(q));
    auto [s, o] = g.reset();
    double total = 0.0;
    bool done = false;
    for (const auto& st : trace.steps) {
      CHECK(st.observation == o);
      StepResult r = g.step(s, st.action);
      total += r.reward;
      s = r.state;
      o = r.observation;
      done = r.done;
    }
    CHECK(done);
    CHECK(o == trace.final_observation);
    // Every oracle step shortens the distance by one.
    CHECK(total == doctest::Approx(q + spec.completion_reward));
  }
}

TEST_CASE("oracle length equals BFS shortest path on 20 specs") {
  for (int i = 0; i < 20; ++i) {
    const Theme theme = i % 2 ? Theme::kHaunt : Theme::kHouse;
    const GameSpec spec = generate_game(theme, 100 + i, 3 + i % 4, 2 + i % 3, 1.0);
    const Game g(spec);
    CHECK(static_cast<int>(g.oracle_walkthrough().steps.size()) == bfs_solution_length(g));
  }
}

TEST_CASE("branching factor on a hand-counted single room") {
  // Only "take key" changes the state; the oracle visits one state.
  CHECK(Game(tiny_spec({"key"})).branching_factor() == 1.0);
  // Adding an object adds "take sock" in that state.
  CHECK(Game(tiny_spec({"key", "sock"})).branching_factor() == 2.0);
}

TEST_CASE("branching factor matches per-state enumeration") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Game g(generate_game(Theme::kHouse, seed, 3, 3, 1.0));
    auto [s, o] = g.reset();
    long total = 0;
    int states = 0;
    for (const auto& st : g.oracle_walkthrough().steps) {
      for (const auto& cmd : g.command_set())
        if (g.step(s, cmd).state.key() != s.key()) ++total;
      ++states;
      s = g.step(s, st.action).state;
    }
    CHECK(g.branching_factor() == doctest::Approx(static_cast<double>(total) / states));
  }
}

TEST_CASE("steps are deterministic and conserve objects") {
  const Game g(generate_game(Theme::kHaunt, 5, 6, 4, 1.0));
  Rng rng(17);
  auto [s, o] = g.reset();
  const auto& cmds = g.command_set();
  for (int t = 0; t < 300 && !s.done; ++t) {
    const std::string& a = cmds[rng.index(cmds.size())];
    StepResult r1 = g.step(s, a);
    StepResult r2 = g.step(s, a);
    CHECK(r1.state == r2.state);
    CHECK(r1.observation == r2.observation);
    CHECK(r1.reward == r2.reward);
    REQUIRE(r1.state.locations.size() == g.spec().objects.size());
    for (const auto& loc : r1.state.locations)
      if (loc.kind == Location::Kind::kContainer) CHECK(g.spec().objects[loc.index].container);
    CHECK(r1.state.quest_index <= static_cast<int>(g.spec().quest.size()));
    if (r1.done) CHECK(r1.state.quest_index == static_cast<int>(g.spec().quest.size()));
    s = r1.state;
  }
}

TEST_CASE("haunt quests need an object named only in an attribute") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GameSpec spec = generate_game(Theme::kHaunt, seed, 6, 4, 1.0);
    int hidden_steps = 0;
    for (const auto& q : spec.quest)
      if (q.object >= 0 && spec.objects[q.object].hidden) ++hidden_steps;
    CHECK(hidden_steps >= 1);
  }
}

TEST_CASE("theme vocabularies overlap more within than across themes") {
  auto overlap = [](const GameSpec& a, const GameSpec& b) {
    std::set<std::string> vb(b.vocabulary.begin(), b.vocabulary.end());
    int n = 0;
    for (const auto& w : a.vocabulary) n += vb.count(w) ? 1 : 0;
    return static_cast<double>(n) / a.vocabulary.size();
  };
  const auto h1 = generate_game(Theme::kHouse, 1, 8, 4, 1.0);
  const auto h2 = generate_game(Theme::kHouse, 2, 8, 4, 1.0);
  const auto g1 = generate_game(Theme::kHaunt, 1, 8, 4, 1.0);
  CHECK(overlap(h1, h2) > overlap(h1, g1));
}

TEST_CASE("vocabulary covers every observation and command word") {
  const Game g(generate_game(Theme::kHouse, 4, 5, 3, 1.0));
  const std::set<std::string> vocab(g.spec().vocabulary.begin(), g.spec().vocabulary.end());
  CHECK(g.spec().vocabulary == compute_vocabulary(g.spec()));
  const auto trace = g.oracle_walkthrough();
  for (const auto& st : trace.steps) {
    for (const auto& w : tokenize(st.observation.text)) CHECK(vocab.count(w));
    for (const auto& w : tokenize(st.action)) CHECK(vocab.count(w));
  }
}

TEST_CASE("spec JSON round trip is lossless") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const GameSpec spec = generate_game(seed % 2 ? Theme::kHaunt : Theme::kHouse, seed, 7, 4, 1.0);
    CHECK(spec_from_json(spec_to_json(spec)) == spec);
  }
  CHECK_THROWS_AS(spec_from_json("{not json"), Error);
}

TEST_CASE("walkthrough JSON round trip") {
  const Game g(generate_game(Theme::kHouse, 9, 5, 3, 1.0));
  const auto w = g.oracle_walkthrough();
  const auto back = walkthrough_from_json(walkthrough_to_json(w));
  REQUIRE(back.steps.size() == w.steps.size());
  for (std::size_t i = 0; i < w.steps.size(); ++i) {
    CHECK(back.steps[i].action == w.steps[i].action);
    CHECK(back.steps[i].observation == w.steps[i].observation);
  }
}
