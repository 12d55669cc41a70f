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

#include "kgtl/engine.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "kgtl/common.hpp"
#include "lexicon.hpp"

namespace kgtl {

int ActionTemplate::slots() const {
  int n = 0;
  for (const auto& w : split(pattern, ' '))
    if (w == "OBJ") ++n;
  return n;
}

}  // namespace kgtl

namespace kgtl::engine {

namespace {

constexpr std::array<std::string_view, kNumDirections> kDirectionNames = {"north", "south",
                                                                         "east", "west"};

std::string article(std::string_view name) {
  if (!name.empty() && std::string_view("aeiou").find(name.front()) != std::string_view::npos)
    return "an";
  return "a";
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

const std::map<std::string, std::string, std::less<>>& verb_aliases() {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"get", "take"}, {"grab", "take"}, {"walk", "go"}, {"place", "put"}, {"insert", "put"}};
  return aliases;
}

std::vector<ActionTemplate> default_templates() {
  return {{"take OBJ", "take"},
          {"open OBJ", "open"},
          {"unlock OBJ with OBJ", "unlock"},
          {"put OBJ in OBJ", "put"}};
}

}  // namespace

std::string_view theme_name(Theme theme) { return theme == Theme::kHouse ? "house" : "haunt"; }

Theme parse_theme(std::string_view name) {
  if (name == "house") return Theme::kHouse;
  if (name == "haunt") return Theme::kHaunt;
  fail(ErrorCode::kInvalidArgument, "unknown theme: " + std::string(name));
}

std::string_view direction_name(Direction d) { return kDirectionNames[static_cast<int>(d)]; }

Direction opposite(Direction d) {
  switch (d) {
    case Direction::kNorth: return Direction::kSouth;
    case Direction::kSouth: return Direction::kNorth;
    case Direction::kEast: return Direction::kWest;
    case Direction::kWest: return Direction::kEast;
  }
  return d;
}

std::optional<Direction> parse_direction(std::string_view word) {
  for (int i = 0; i < kNumDirections; ++i)
    if (kDirectionNames[i] == word) return static_cast<Direction>(i);
  return std::nullopt;
}

std::string_view event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::kMoved: return "moved";
    case EventKind::kTook: return "took";
    case EventKind::kOpened: return "opened";
    case EventKind::kUnlocked: return "unlocked";
    case EventKind::kPlaced: return "placed";
    case EventKind::kFailed: return "failed";
  }
  return "failed";
}

EventKind parse_event_kind(std::string_view name) {
  for (auto k : {EventKind::kMoved, EventKind::kTook, EventKind::kOpened, EventKind::kUnlocked,
                 EventKind::kPlaced, EventKind::kFailed})
    if (event_kind_name(k) == name) return k;
  fail(ErrorCode::kFormat, "unknown event kind: " + std::string(name));
}

int GameSpec::find_object(std::string_view name) const {
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (objects[i].name == name) return static_cast<int>(i);
  return -1;
}

int GameSpec::find_room(std::string_view name) const {
  for (std::size_t i = 0; i < rooms.size(); ++i)
    if (rooms[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> GameSpec::object_names() const {
  std::vector<std::string> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.name);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> GameState::inventory() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < locations.size(); ++i)
    if (locations[i].kind == Location::Kind::kInventory) out.push_back(static_cast<int>(i));
  return out;
}

std::string GameState::key() const {
  std::string k;
  k.reserve(2 + locations.size() + (locations.size() + 3) / 4);
  k.push_back(static_cast<char>(room));
  k.push_back(static_cast<char>(quest_index));
  for (const auto& loc : locations)
    k.push_back(static_cast<char>((static_cast<int>(loc.kind) << 6) | (loc.index & 63)));
  unsigned char acc = 0;
  int bits = 0;
  for (std::size_t i = 0; i < open.size(); ++i) {
    acc = static_cast<unsigned char>(acc | ((open[i] ? 1 : 0) << bits) |
                                     ((unlocked[i] ? 1 : 0) << (bits + 1)));
    bits += 2;
    if (bits == 8) {
      k.push_back(static_cast<char>(acc));
      acc = 0;
      bits = 0;
    }
  }
  if (bits) k.push_back(static_cast<char>(acc));
  return k;
}

std::vector<std::string> navigation_commands() {
  std::vector<std::string> out;
  for (auto name : kDirectionNames) out.push_back("go " + std::string(name));
  return out;
}

std::vector<std::string> theme_lexicon(Theme theme) {
  const auto& lex = detail::lexicon(theme);
  std::set<std::string> words;
  auto add = [&](std::string_view text) {
    for (auto& t : tokenize(text)) words.insert(t);
  };
  for (const auto& p : detail::grammar_phrases()) add(p);
  for (const auto& w : detail::command_words()) add(w);
  for (const auto& s : lex.rooms) add(s);
  for (const auto& s : lex.containers) add(s);
  add(lex.key);
  for (const auto& s : lex.items) add(s);
  for (const auto& s : lex.hidden_items) add(s);
  for (const auto& s : lex.scenery) add(s);
  for (const auto& s : lex.adjectives) add(s);
  add(lex.hiding_clause);
  return {words.begin(), words.end()};
}

std::vector<std::string> compute_vocabulary(const GameSpec& spec) {
  std::set<std::string> words;
  auto add = [&](std::string_view text) {
    for (auto& t : tokenize(text)) words.insert(t);
  };
  for (const auto& p : detail::grammar_phrases()) add(p);
  for (const auto& w : detail::command_words()) add(w);
  for (const auto& r : spec.rooms) add(r.name);
  for (const auto& o : spec.objects) {
    add(o.name);
    for (const auto& a : o.adjectives) add(a);
  }
  for (const auto& t : spec.templates) {
    for (const auto& w : split(t.pattern, ' '))
      if (w != "OBJ") add(w);
  }
  return {words.begin(), words.end()};
}

// ---------------------------------------------------------------------------
// Game

Game::Game(GameSpec spec) : spec_(std::move(spec)) {
  const int n_rooms = static_cast<int>(spec_.rooms.size());
  const int n_obj = static_cast<int>(spec_.objects.size());
  KGTL_REQUIRE(n_rooms >= 1, "game needs at least one room");
  KGTL_REQUIRE(n_rooms < 64 && n_obj < 64, "game too large (max 63 rooms and objects)");
  KGTL_REQUIRE(spec_.start_room >= 0 && spec_.start_room < n_rooms, "start room out of range");
  KGTL_REQUIRE(!spec_.quest.empty(), "quest must have at least one step");
  KGTL_REQUIRE(spec_.completion_reward > 0.0, "completion reward must be positive");

  std::set<std::string> names;
  for (int r = 0; r < n_rooms; ++r) {
    KGTL_REQUIRE(names.insert(spec_.rooms[r].name).second,
                 "duplicate room name: " + spec_.rooms[r].name);
    for (int d = 0; d < kNumDirections; ++d) {
      const int to = spec_.rooms[r].exits[d];
      if (to < 0) continue;
      KGTL_REQUIRE(to < n_rooms, "exit target out of range");
      KGTL_REQUIRE(spec_.rooms[to].exits[static_cast<int>(opposite(static_cast<Direction>(d)))] == r,
                   "room connections must be symmetric");
    }
  }
  {
    std::vector<char> seen(n_rooms, 0);
    std::deque<int> q{spec_.start_room};
    seen[spec_.start_room] = 1;
    int count = 1;
    while (!q.empty()) {
      const int r = q.front();
      q.pop_front();
      for (int to : spec_.rooms[r].exits)
        if (to >= 0 && !seen[to]) {
          seen[to] = 1;
          ++count;
          q.push_back(to);
        }
    }
    KGTL_REQUIRE(count == n_rooms, "room graph is not connected");
  }
  for (int i = 0; i < n_obj; ++i) {
    const auto& o = spec_.objects[i];
    KGTL_REQUIRE(!o.name.empty(), "object with empty name");
    KGTL_REQUIRE(names.insert(o.name).second, "duplicate entity name: " + o.name);
    KGTL_REQUIRE(!(o.container && o.takeable), "containers cannot be takeable");
    switch (o.initial.kind) {
      case Location::Kind::kRoom:
        KGTL_REQUIRE(o.initial.index >= 0 && o.initial.index < n_rooms, "object room out of range");
        break;
      case Location::Kind::kContainer:
        KGTL_REQUIRE(o.initial.index >= 0 && o.initial.index < n_obj &&
                         spec_.objects[o.initial.index].container &&
                         spec_.objects[o.initial.index].initial.kind == Location::Kind::kRoom,
                     "object must start inside a container placed in a room");
        break;
      case Location::Kind::kInventory:
        KGTL_REQUIRE(o.takeable, "only takeable objects can start in the inventory");
        break;
    }
    if (o.locked) KGTL_REQUIRE(o.container && o.key >= 0 && o.key < n_obj, "locked container needs a key");
  }
  for (const auto& s : spec_.quest) {
    switch (s.kind) {
      case StepKind::kGo:
        KGTL_REQUIRE(s.room >= 0 && s.room < n_rooms, "quest go-step room out of range");
        break;
      case StepKind::kPut:
        KGTL_REQUIRE(s.target >= 0 && s.target < n_obj && spec_.objects[s.target].container,
                     "quest put-step target must be a container");
        [[fallthrough]];
      default:
        KGTL_REQUIRE(s.object >= 0 && s.object < n_obj, "quest step object out of range");
    }
  }

  commands_ = navigation_commands();
  {
    std::vector<std::string> objects = spec_.object_names();
    std::vector<std::string> filled;
    for (const auto& t : spec_.templates) {
      std::vector<std::string> words = split(t.pattern, ' ');
      std::vector<std::string> partial{""};
      for (const auto& w : words) {
        std::vector<std::string> next;
        for (const auto& p : partial) {
          const std::string sep = p.empty() ? "" : " ";
          if (w == "OBJ") {
            for (const auto& o : objects) next.push_back(p + sep + o);
          } else {
            next.push_back(p + sep + w);
          }
        }
        partial = std::move(next);
      }
      filled.insert(filled.end(), partial.begin(), partial.end());
    }
    std::sort(filled.begin(), filled.end());
    filled.erase(std::unique(filled.begin(), filled.end()), filled.end());
    commands_.insert(commands_.end(), filled.begin(), filled.end());
  }

  build_distance_table();
}

GameState Game::initial_state() const {
  GameState s;
  s.room = spec_.start_room;
  const std::size_t n = spec_.objects.size();
  s.locations.resize(n);
  s.open.assign(n, 0);
  s.unlocked.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    s.locations[i] = spec_.objects[i].initial;
    s.unlocked[i] = spec_.objects[i].locked ? 0 : 1;
  }
  advance_quest(s);
  return s;
}

bool Game::step_satisfied(const QuestStep& step, const GameState& s) const {
  switch (step.kind) {
    case StepKind::kGo: return s.room == step.room;
    case StepKind::kTake: return s.holds(step.object);
    case StepKind::kOpen: return s.open[step.object] != 0;
    case StepKind::kUnlock: return s.unlocked[step.object] != 0;
    case StepKind::kPut: return s.locations[step.object] == Location::inside(step.target);
  }
  return false;
}

void Game::advance_quest(GameState& s) const {
  const int len = static_cast<int>(spec_.quest.size());
  while (s.quest_index < len && step_satisfied(spec_.quest[s.quest_index], s)) ++s.quest_index;
  s.done = s.quest_index == len;
}

bool Game::visible(const GameState& s, int object) const {
  const Location& loc = s.locations[object];
  if (loc.kind == Location::Kind::kRoom) return loc.index == s.room;
  if (loc.kind == Location::Kind::kContainer) {
    const Location& cloc = s.locations[loc.index];
    return cloc.kind == Location::Kind::kRoom && cloc.index == s.room && s.open[loc.index];
  }
  return false;
}

Game::Outcome Game::apply(const GameState& state, std::string_view action) const {
  Outcome out{state, {}, {}};
  auto failed = [&](std::string msg) {
    out.feedback = std::move(msg);
    out.events.push_back({EventKind::kFailed, {}, {}, {}, {}, {}});
    return out;
  };

  std::vector<std::string> words;
  {
    std::istringstream in{to_lower(action)};
    std::string w;
    while (in >> w) {
      while (!w.empty() && (w.back() == '.' || w.back() == '!' || w.back() == ',')) w.pop_back();
      if (!w.empty()) words.push_back(w);
    }
  }
  if (words.empty()) return failed(std::string(kUnrecognisedVerb));
  std::string verb = words[0];
  if (auto it = verb_aliases().find(verb); it != verb_aliases().end()) verb = it->second;
  if (parse_direction(verb) && words.size() == 1) {
    words.insert(words.begin(), "go");
    verb = "go";
  }

  auto join_range = [&](std::size_t b, std::size_t e) {
    std::vector<std::string> part(words.begin() + static_cast<long>(b),
                                  words.begin() + static_cast<long>(e));
    return join(part, " ");
  };
  auto find_word = [&](std::string_view w, std::size_t from) -> std::size_t {
    for (std::size_t i = from; i < words.size(); ++i)
      if (words[i] == w) return i;
    return words.size();
  };
  auto resolve = [&](const std::string& phrase) { return spec_.find_object(normalize_entity(phrase)); };

  const std::string cannot_see = "You cannot see any such thing.";

  if (verb == "go") {
    if (words.size() != 2) return failed("You cannot go that way.");
    auto dir = parse_direction(words[1]);
    if (!dir) return failed("You cannot go that way.");
    const int to = spec_.rooms[state.room].exits[static_cast<int>(*dir)];
    if (to < 0) return failed("You cannot go that way.");
    out.state.room = to;
    out.feedback = "You go " + std::string(direction_name(*dir)) + ".";
    out.events.push_back({EventKind::kMoved, {}, {}, spec_.rooms[state.room].name,
                          spec_.rooms[to].name, std::string(direction_name(*dir))});
  } else if (verb == "take") {
    if (words.size() < 2) return failed(cannot_see);
    const int obj = resolve(join_range(1, words.size()));
    if (obj < 0) return failed(cannot_see);
    if (state.holds(obj)) return failed("You already have that.");
    if (!visible(state, obj)) return failed(cannot_see);
    if (!spec_.objects[obj].takeable) return failed("You cannot take that.");
    out.state.locations[obj] = Location::inventory();
    out.feedback = "You take the " + spec_.objects[obj].name + ".";
    out.events.push_back({EventKind::kTook, spec_.objects[obj].name, {}, {}, {}, {}});
  } else if (verb == "open") {
    if (words.size() < 2) return failed(cannot_see);
    const int obj = resolve(join_range(1, words.size()));
    if (obj < 0 || !visible(state, obj)) return failed(cannot_see);
    const auto& o = spec_.objects[obj];
    if (!o.container) return failed("You cannot open that.");
    if (state.open[obj]) return failed("It is already open.");
    if (!state.unlocked[obj]) return failed("It is locked.");
    out.state.open[obj] = 1;
    out.feedback = "You open the " + o.name + ".";
    out.events.push_back({EventKind::kOpened, o.name, {}, {}, {}, {}});
  } else if (verb == "unlock") {
    const std::size_t with = find_word("with", 1);
    if (with <= 1 || with + 1 >= words.size()) return failed(cannot_see);
    const int obj = resolve(join_range(1, with));
    const int key = resolve(join_range(with + 1, words.size()));
    if (obj < 0 || key < 0 || !visible(state, obj)) return failed(cannot_see);
    if (!state.holds(key)) return failed("You are not carrying that.");
    const auto& o = spec_.objects[obj];
    if (!o.container || !o.locked || state.unlocked[obj]) return failed("It is not locked.");
    if (o.key != key) return failed("That does not fit the lock.");
    out.state.unlocked[obj] = 1;
    out.feedback = "You unlock the " + o.name + " with the " + spec_.objects[key].name + ".";
    out.events.push_back({EventKind::kUnlocked, o.name, spec_.objects[key].name, {}, {}, {}});
  } else if (verb == "put") {
    const std::size_t in = find_word("in", 1);
    if (in <= 1 || in + 1 >= words.size()) return failed(cannot_see);
    const int obj = resolve(join_range(1, in));
    const int dst = resolve(join_range(in + 1, words.size()));
    if (obj < 0 || dst < 0) return failed(cannot_see);
    if (!state.holds(obj)) return failed("You are not carrying that.");
    if (!visible(state, dst)) return failed(cannot_see);
    if (!spec_.objects[dst].container || dst == obj) return failed("You cannot put that there.");
    if (!state.open[dst]) return failed("It is closed.");
    out.state.locations[obj] = Location::inside(dst);
    out.feedback = "You put the " + spec_.objects[obj].name + " in the " + spec_.objects[dst].name + ".";
    out.events.push_back({EventKind::kPlaced, spec_.objects[obj].name, spec_.objects[dst].name, {}, {}, {}});
  } else {
    return failed(std::string(kUnrecognisedVerb));
  }
  advance_quest(out.state);
  return out;
}

std::string Game::describe(const GameState& s, std::string_view feedback) const {
  std::string text(feedback);
  auto sentence = [&](const std::string& sent) {
    if (!text.empty()) text += ' ';
    text += sent;
  };
  sentence("You are in the " + spec_.rooms[s.room].name + ".");
  const int n = static_cast<int>(spec_.objects.size());
  for (int i = 0; i < n; ++i) {
    const auto& o = spec_.objects[i];
    if (s.locations[i] != Location::room(s.room) || o.hidden) continue;
    sentence(capitalize("there is " + article(o.name) + " " + o.name + " here."));
    for (const auto& adj : o.adjectives) sentence("The " + o.name + " is " + adj + ".");
    if (o.container) {
      const char* st = s.open[i] ? "open" : (s.unlocked[i] ? "closed" : "locked");
      sentence("The " + o.name + " is " + st + ".");
      if (s.open[i]) {
        for (int j = 0; j < n; ++j)
          if (s.locations[j] == Location::inside(i))
            sentence("In the " + o.name + " there is " + article(spec_.objects[j].name) + " " +
                     spec_.objects[j].name + ".");
      }
    }
  }
  std::vector<std::string> exits;
  for (int d = 0; d < kNumDirections; ++d)
    if (spec_.rooms[s.room].exits[d] >= 0) exits.emplace_back(kDirectionNames[d]);
  sentence("Exits: " + (exits.empty() ? std::string("none") : join(exits, ", ")) + ".");
  for (int i : s.inventory())
    sentence("You have " + article(spec_.objects[i].name) + " " + spec_.objects[i].name + ".");
  if (s.done) sentence("Quest complete.");
  return text;
}

std::pair<GameState, Observation> Game::reset() const {
  GameState s = initial_state();
  Observation obs{describe(s, ""), {}};
  return {std::move(s), std::move(obs)};
}

StepResult Game::step(const GameState& state, std::string_view action) const {
  KGTL_REQUIRE(!state.done, "step called on a finished game");
  Outcome o = apply(state, action);
  o.state.steps_taken = state.steps_taken + 1;
  StepResult r;
  const int before = distance(state);
  const int after = distance(o.state);
  r.reward = after < before ? 1.0 : (after > before ? -1.0 : 0.0);
  if (o.state.done) r.reward += spec_.completion_reward;
  r.done = o.state.done;
  r.observation.text = describe(o.state, o.feedback);
  r.observation.events = std::move(o.events);
  r.state = std::move(o.state);
  return r;
}

int Game::distance(const GameState& state) const {
  auto it = distance_.find(state.key());
  if (it == distance_.end()) fail(ErrorCode::kInternal, "state outside the reachable state graph");
  return it->second;
}

std::vector<std::string> Game::effective_commands(const GameState& s) const {
  std::vector<std::string> out;
  if (s.done) return out;
  for (int d = 0; d < kNumDirections; ++d)
    if (spec_.rooms[s.room].exits[d] >= 0) out.push_back("go " + std::string(kDirectionNames[d]));
  const int n = static_cast<int>(spec_.objects.size());
  for (int i = 0; i < n; ++i) {
    const auto& o = spec_.objects[i];
    if (o.takeable && !s.holds(i) && visible(s, i)) out.push_back("take " + o.name);
    if (o.container && visible(s, i)) {
      if (!s.open[i] && s.unlocked[i]) out.push_back("open " + o.name);
      if (!s.unlocked[i] && o.key >= 0 && s.holds(o.key))
        out.push_back("unlock " + o.name + " with " + spec_.objects[o.key].name);
      if (s.open[i])
        for (int x : s.inventory()) out.push_back("put " + spec_.objects[x].name + " in " + o.name);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Game::build_distance_table() {
  // Forward enumeration of reachable states, then reverse BFS from the
  // completed ones.
  std::vector<GameState> states;
  std::vector<std::vector<int>> preds;
  std::unordered_map<std::string, int> index;
  states.push_back(initial_state());
  index.emplace(states[0].key(), 0);
  preds.emplace_back();
  for (std::size_t head = 0; head < states.size(); ++head) {
    if (states[head].done) continue;
    const GameState cur = states[head];
    for (const auto& cmd : effective_commands(cur)) {
      GameState next = apply(cur, cmd).state;
      std::string k = next.key();
      auto [it, inserted] = index.emplace(std::move(k), static_cast<int>(states.size()));
      if (inserted) {
        states.push_back(std::move(next));
        preds.emplace_back();
      }
      preds[it->second].push_back(static_cast<int>(head));
    }
  }
  std::vector<int> dist(states.size(), -1);
  std::deque<int> q;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i].done) {
      dist[i] = 0;
      q.push_back(static_cast<int>(i));
    }
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (int p : preds[v])
      if (dist[p] < 0) {
        dist[p] = dist[v] + 1;
        q.push_back(p);
      }
  }
  if (dist[0] < 0) fail(ErrorCode::kInvalidArgument, "quest cannot be completed from the start state");
  // Every quest action is reversible or monotone, so unreachable-goal states
  // would indicate a malformed spec.
  for (std::size_t i = 0; i < states.size(); ++i)
    if (dist[i] < 0) fail(ErrorCode::kInvalidArgument, "spec contains a dead-end state");
  distance_.reserve(index.size());
  for (auto& [k, i] : index) distance_.emplace(k, dist[i]);
}

Walkthrough Game::oracle_walkthrough() const {
  Walkthrough w;
  auto [state, obs] = reset();
  while (!state.done) {
    const int d = distance(state);
    std::string chosen;
    for (const auto& cmd : effective_commands(state)) {
      if (distance(apply(state, cmd).state) == d - 1) {
        chosen = cmd;
        break;
      }
    }
    if (chosen.empty()) fail(ErrorCode::kInternal, "oracle found no improving action");
    w.steps.push_back({obs, chosen, state.room, state.quest_index});
    StepResult r = step(state, chosen);
    state = std::move(r.state);
    obs = std::move(r.observation);
  }
  w.final_observation = std::move(obs);
  return w;
}

double Game::branching_factor() const {
  auto [state, obs] = reset();
  long total = 0;
  int visited = 0;
  while (!state.done) {
    const std::string k = state.key();
    for (const auto& cmd : commands_)
      if (apply(state, cmd).state.key() != k) ++total;
    ++visited;
    const int d = distance(state);
    std::string chosen;
    for (const auto& cmd : effective_commands(state))
      if (distance(apply(state, cmd).state) == d - 1) {
        chosen = cmd;
        break;
      }
    state = apply(state, chosen).state;
  }
  return visited ? static_cast<double>(total) / visited : 0.0;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct Builder {
  GameSpec spec;
  Rng rng;
  const detail::Lexicon& lex;
  std::vector<std::string> item_pool, container_pool, scenery_pool, adjective_pool, hidden_pool;
  std::vector<std::pair<int, int>> grid;  // room -> (x, y)

  Builder(Theme theme, std::uint64_t seed, std::uint64_t stream_seed)
      : rng(stream_seed), lex(detail::lexicon(theme)) {
    spec.theme = theme;
    spec.seed = seed;
    item_pool = lex.items;
    container_pool = lex.containers;
    scenery_pool = lex.scenery;
    adjective_pool = lex.adjectives;
    hidden_pool = lex.hidden_items;
    rng.shuffle(item_pool);
    rng.shuffle(container_pool);
    rng.shuffle(scenery_pool);
    rng.shuffle(adjective_pool);
    rng.shuffle(hidden_pool);
  }

  static std::string take_from(std::vector<std::string>& pool) {
    if (pool.empty()) return {};
    std::string s = std::move(pool.back());
    pool.pop_back();
    return s;
  }

  int add_object(GameObject o) {
    spec.objects.push_back(std::move(o));
    return static_cast<int>(spec.objects.size()) - 1;
  }

  void build_map(int n_rooms) {
    std::vector<std::string> names = lex.rooms;
    rng.shuffle(names);
    static constexpr int dx[] = {0, 0, 1, -1};
    static constexpr int dy[] = {1, -1, 0, 0};
    auto cell_of = [&](int x, int y) {
      for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i].first == x && grid[i].second == y) return static_cast<int>(i);
      return -1;
    };
    spec.rooms.push_back({names[0], {-1, -1, -1, -1}});
    grid.push_back({0, 0});
    while (static_cast<int>(spec.rooms.size()) < n_rooms) {
      const int from = static_cast<int>(rng.index(spec.rooms.size()));
      const int d = static_cast<int>(rng.index(kNumDirections));
      const int x = grid[from].first + dx[d], y = grid[from].second + dy[d];
      if (cell_of(x, y) >= 0) continue;
      const int id = static_cast<int>(spec.rooms.size());
      spec.rooms.push_back({names[id], {-1, -1, -1, -1}});
      grid.push_back({x, y});
      spec.rooms[from].exits[d] = id;
      spec.rooms[id].exits[static_cast<int>(opposite(static_cast<Direction>(d)))] = from;
    }
    // A few extra doors between grid neighbours to create loops.
    for (int a = 0; a < n_rooms; ++a)
      for (int d = 0; d < kNumDirections; ++d) {
        const int b = cell_of(grid[a].first + dx[d], grid[a].second + dy[d]);
        if (b <= a || spec.rooms[a].exits[d] >= 0) continue;
        if (rng.bernoulli(0.2)) {
          spec.rooms[a].exits[d] = b;
          spec.rooms[b].exits[static_cast<int>(opposite(static_cast<Direction>(d)))] = a;
        }
      }
    spec.start_room = 0;
  }

  void maybe_adjective(GameObject& o, double p) {
    if (!adjective_pool.empty() && rng.bernoulli(p))
      o.adjectives.push_back(adjective_pool[rng.index(adjective_pool.size())]);
  }

  // Plans the quest by walking a simple path through the map and spawning the
  // objects each step needs. Returns false when the pools run dry.
  bool plan_quest(int quest_len, double adj_p) {
    int cur = spec.start_room;
    std::set<int> visited{cur};
    std::vector<int> held;            // carried plain items
    int key = -1;                     // carried, not yet used
    std::vector<int> open_here;       // containers opened by the plan
    bool need_hidden = spec.theme == Theme::kHaunt;
    int remaining = quest_len;

    auto push = [&](StepKind kind, std::string action, int room, int object, int target) {
      spec.quest.push_back({kind, std::move(action), room, object, target});
      --remaining;
    };
    auto new_item = [&](Location loc) -> int {
      std::string name = take_from(item_pool);
      if (name.empty()) return -1;
      GameObject o;
      o.name = name;
      o.initial = loc;
      o.takeable = true;
      maybe_adjective(o, adj_p);
      return add_object(std::move(o));
    };
    auto new_container = [&](bool locked) -> int {
      std::string name = take_from(container_pool);
      if (name.empty()) return -1;
      GameObject o;
      o.name = name;
      o.initial = Location::room(cur);
      o.container = true;
      o.locked = locked;
      maybe_adjective(o, adj_p);
      return add_object(std::move(o));
    };

    while (remaining > 0) {
      std::vector<int> exits_unvisited;
      for (int d = 0; d < kNumDirections; ++d) {
        const int to = spec.rooms[cur].exits[d];
        if (to >= 0 && !visited.count(to)) exits_unvisited.push_back(d);
      }
      int open_container_here = -1;
      for (int c : open_here)
        if (spec.objects[c].initial.index == cur) open_container_here = c;

      enum Option { kMove, kTake, kHidden, kOpenTake, kKey, kUnlock, kPutOpen, kPutNew };
      std::vector<std::pair<Option, double>> options;
      if (!exits_unvisited.empty() && remaining >= 2) options.push_back({kMove, 4.0});
      if (need_hidden && remaining <= 2) {
        options = {{kHidden, 1.0}};
      } else {
        options.push_back({kTake, 1.5});
        if (need_hidden) options.push_back({kHidden, 1.0});
        if (remaining >= 2) options.push_back({kOpenTake, 2.0});
        if (key < 0 && remaining >= 5 && spec.find_object(lex.key) < 0) options.push_back({kKey, 2.0});
        if (key >= 0 && remaining >= 3) options.push_back({kUnlock, 4.0});
        if (!held.empty() && open_container_here >= 0) options.push_back({kPutOpen, 3.0});
        if (!held.empty() && remaining >= 2) options.push_back({kPutNew, 1.5});
      }
      double total = 0;
      for (auto& [o, w] : options) total += w;
      double pick = rng.uniform() * total;
      Option choice = options.back().first;
      for (auto& [o, w] : options) {
        if (pick < w) {
          choice = o;
          break;
        }
        pick -= w;
      }

      switch (choice) {
        case kMove: {
          const int d = exits_unvisited[rng.index(exits_unvisited.size())];
          const int to = spec.rooms[cur].exits[d];
          push(StepKind::kGo, "go " + std::string(kDirectionNames[d]), to, -1, -1);
          cur = to;
          visited.insert(to);
          break;
        }
        case kTake: {
          const int x = new_item(Location::room(cur));
          if (x < 0) return false;
          push(StepKind::kTake, "take " + spec.objects[x].name, cur, x, -1);
          held.push_back(x);
          break;
        }
        case kHidden: {
          std::string name = take_from(hidden_pool);
          std::string cover = take_from(scenery_pool);
          if (name.empty() || cover.empty()) return false;
          GameObject h;
          h.name = name;
          h.initial = Location::room(cur);
          h.takeable = true;
          h.hidden = true;
          const int hid = add_object(std::move(h));
          GameObject s;
          s.name = cover;
          s.initial = Location::room(cur);
          s.adjectives.push_back(lex.hiding_clause + " " + article(name) + " " + name);
          add_object(std::move(s));
          push(StepKind::kTake, "take " + name, cur, hid, -1);
          held.push_back(hid);
          need_hidden = false;
          break;
        }
        case kOpenTake: {
          const int c = new_container(false);
          if (c < 0) return false;
          const int x = new_item(Location::inside(c));
          if (x < 0) return false;
          push(StepKind::kOpen, "open " + spec.objects[c].name, cur, c, -1);
          push(StepKind::kTake, "take " + spec.objects[x].name, cur, x, -1);
          open_here.push_back(c);
          held.push_back(x);
          break;
        }
        case kKey: {
          GameObject k;
          k.name = lex.key;
          k.initial = Location::room(cur);
          k.takeable = true;
          maybe_adjective(k, adj_p);
          key = add_object(std::move(k));
          push(StepKind::kTake, "take " + lex.key, cur, key, -1);
          break;
        }
        case kUnlock: {
          const int c = new_container(true);
          if (c < 0) return false;
          spec.objects[c].key = key;
          const int x = new_item(Location::inside(c));
          if (x < 0) return false;
          push(StepKind::kUnlock, "unlock " + spec.objects[c].name + " with " + lex.key, cur, c, key);
          push(StepKind::kOpen, "open " + spec.objects[c].name, cur, c, -1);
          push(StepKind::kTake, "take " + spec.objects[x].name, cur, x, -1);
          open_here.push_back(c);
          held.push_back(x);
          key = -2;  // used; no second lock
          break;
        }
        case kPutOpen:
        case kPutNew: {
          int c = open_container_here;
          if (choice == kPutNew) {
            c = new_container(false);
            if (c < 0) return false;
            push(StepKind::kOpen, "open " + spec.objects[c].name, cur, c, -1);
            open_here.push_back(c);
          }
          const std::size_t pick_item = rng.index(held.size());
          const int x = held[pick_item];
          held.erase(held.begin() + static_cast<long>(pick_item));
          push(StepKind::kPut, "put " + spec.objects[x].name + " in " + spec.objects[c].name, cur, x, c);
          break;
        }
      }
    }
    return remaining == 0;
  }

  void add_distractors(int n_rooms, double vocab_scale, double adj_p) {
    const int n_scenery = std::max(1, static_cast<int>(std::lround(vocab_scale * n_rooms * 0.5)));
    for (int i = 0; i < n_scenery; ++i) {
      std::string name = take_from(scenery_pool);
      if (name.empty()) break;
      GameObject o;
      o.name = name;
      o.initial = Location::room(static_cast<int>(rng.index(spec.rooms.size())));
      maybe_adjective(o, adj_p);
      add_object(std::move(o));
    }
    if (n_rooms >= 4) {
      std::string name = take_from(item_pool);
      if (!name.empty()) {
        GameObject o;
        o.name = name;
        o.initial = Location::room(static_cast<int>(rng.index(spec.rooms.size())));
        o.takeable = true;
        maybe_adjective(o, adj_p);
        add_object(std::move(o));
      }
    }
    if (n_rooms >= 6) {
      std::string name = take_from(container_pool);
      if (!name.empty()) {
        GameObject o;
        o.name = name;
        o.initial = Location::room(static_cast<int>(rng.index(spec.rooms.size())));
        o.container = true;
        maybe_adjective(o, adj_p);
        add_object(std::move(o));
      }
    }
  }
};

}  // namespace

GameSpec generate_game(Theme theme, std::uint64_t seed, int n_rooms, int quest_len,
                       double vocab_scale) {
  KGTL_REQUIRE(n_rooms >= 1, "n_rooms must be at least 1");
  KGTL_REQUIRE(quest_len >= 1, "quest_len must be at least 1");
  KGTL_REQUIRE(vocab_scale > 0.0, "vocab_scale must be positive");
  const auto& lex = detail::lexicon(theme);
  KGTL_REQUIRE(n_rooms <= static_cast<int>(lex.rooms.size()),
               "n_rooms exceeds the theme's room lexicon (" + std::to_string(lex.rooms.size()) + ")");
  KGTL_REQUIRE(quest_len <= 24, "quest_len too long for the theme lexicon");
  const double adj_p = std::min(1.0, 0.5 * vocab_scale);
  for (int attempt = 0; attempt < 500; ++attempt) {
    Builder b(theme, seed, derive_seed(seed, "generate/" + std::to_string(attempt)));
    b.build_map(n_rooms);
    if (!b.plan_quest(quest_len, adj_p)) continue;
    b.add_distractors(n_rooms, vocab_scale, adj_p);
    b.spec.templates = default_templates();
    b.spec.vocabulary = compute_vocabulary(b.spec);
    try {
      Game g(b.spec);
      auto [s, o] = g.reset();
      if (g.distance(s) == quest_len) return std::move(b.spec);
    } catch (const Error&) {
    }
  }
  fail(ErrorCode::kInvalidArgument, "could not generate a solvable game for these parameters");
}

}  // namespace kgtl::engine
