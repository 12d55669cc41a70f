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

#pragma once

// Grammar-driven text-adventure generator and deterministic simulator.
//
// A GameSpec is a plain value (rooms, objects, quest, vocabulary). A Game is
// the compiled form: it owns the spec plus the exhaustive distance-to-goal
// table over the reachable state graph, which drives both the shaped reward
// and the oracle walkthrough. Both are immutable once built.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kgtl {

// Verb pattern with one or two OBJ slots, e.g. "put OBJ in OBJ".
struct ActionTemplate {
  std::string pattern;
  std::string verb;

  int slots() const;
  bool operator==(const ActionTemplate&) const = default;
};

}  // namespace kgtl

namespace kgtl::engine {

enum class Theme { kHouse, kHaunt };
std::string_view theme_name(Theme theme);
Theme parse_theme(std::string_view name);

enum class Direction : int { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3 };
inline constexpr int kNumDirections = 4;
std::string_view direction_name(Direction d);
Direction opposite(Direction d);
std::optional<Direction> parse_direction(std::string_view word);

struct Room {
  std::string name;
  std::array<int, kNumDirections> exits{-1, -1, -1, -1};
  bool operator==(const Room&) const = default;
};

struct Location {
  enum class Kind : std::uint8_t { kRoom = 0, kContainer = 1, kInventory = 2 };
  Kind kind = Kind::kRoom;
  int index = 0;  // room or container object index; 0 for inventory

  static Location room(int r) { return {Kind::kRoom, r}; }
  static Location inside(int container) { return {Kind::kContainer, container}; }
  static Location inventory() { return {Kind::kInventory, 0}; }
  bool operator==(const Location&) const = default;
};

struct GameObject {
  std::string name;
  std::vector<std::string> adjectives;  // each rendered as "The X is A."
  Location initial;
  bool takeable = false;
  bool container = false;  // containers are openable and never takeable
  bool locked = false;     // initial lock state
  int key = -1;            // object index that unlocks this container
  bool hidden = false;     // not listed; named only inside another object's attribute
  bool operator==(const GameObject&) const = default;
};

enum class StepKind { kGo, kTake, kOpen, kUnlock, kPut };

// A quest step is complete when its predicate holds while it is the current
// step: kGo -> player in `room`; kTake -> `object` carried; kOpen -> `object`
// open; kUnlock -> `object` unlocked; kPut -> `object` inside `target`.
struct QuestStep {
  StepKind kind = StepKind::kGo;
  std::string action;  // canonical command that achieves it
  int room = -1;       // where the action is performed (kGo: destination)
  int object = -1;
  int target = -1;     // kPut: container; kUnlock: key
  bool operator==(const QuestStep&) const = default;
};

struct GameSpec {
  Theme theme = Theme::kHouse;
  std::uint64_t seed = 0;
  std::vector<Room> rooms;
  int start_room = 0;
  std::vector<GameObject> objects;
  std::vector<QuestStep> quest;
  std::vector<std::string> vocabulary;  // sorted, unique
  std::vector<ActionTemplate> templates;
  double completion_reward = 2.0;

  int find_object(std::string_view name) const;  // -1 when absent
  int find_room(std::string_view name) const;
  std::vector<std::string> object_names() const;
  bool operator==(const GameSpec&) const = default;
};

struct GameState {
  int room = 0;
  std::vector<Location> locations;     // per object
  std::vector<std::uint8_t> open;      // per object (containers)
  std::vector<std::uint8_t> unlocked;  // per object (containers)
  int quest_index = 0;
  int steps_taken = 0;
  bool done = false;

  std::vector<int> inventory() const;
  bool holds(int object) const {
    return locations[static_cast<std::size_t>(object)].kind == Location::Kind::kInventory;
  }
  // Packed identity of the world state. Excludes steps_taken.
  std::string key() const;
  bool operator==(const GameState&) const = default;
};

enum class EventKind { kMoved, kTook, kOpened, kUnlocked, kPlaced, kFailed };
std::string_view event_kind_name(EventKind k);
EventKind parse_event_kind(std::string_view name);

struct Event {
  EventKind kind = EventKind::kFailed;
  std::string subject;    // object acted on (took/opened/unlocked/placed)
  std::string object;     // instrument or destination container
  std::string from;       // moved: origin room
  std::string to;         // moved: destination room
  std::string direction;  // moved
  bool operator==(const Event&) const = default;
};

struct Observation {
  std::string text;
  std::vector<Event> events;
  bool operator==(const Observation&) const = default;
};

struct StepResult {
  GameState state;
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

struct WalkthroughStep {
  Observation observation;  // observation the action responds to
  std::string action;
  int room = 0;             // symbolic state the action was taken in
  int quest_index = 0;
};

struct Walkthrough {
  std::vector<WalkthroughStep> steps;
  Observation final_observation;
};

inline constexpr std::string_view kUnrecognisedVerb = "That is not a verb I recognise.";

GameSpec generate_game(Theme theme, std::uint64_t seed, int n_rooms, int quest_len,
                       double vocab_scale);

// Shared function words plus the theme's lexicon; the union over all games of
// a theme is bounded by this.
std::vector<std::string> theme_lexicon(Theme theme);

// Vocabulary implied by a spec: every word any observation or accepted
// command can contain.
std::vector<std::string> compute_vocabulary(const GameSpec& spec);

// Navigation commands ("go north", ...) in fixed order.
std::vector<std::string> navigation_commands();

class Game {
 public:
  // Validates the spec and enumerates its reachable state graph. Throws
  // kInvalidArgument if the quest cannot be completed.
  explicit Game(GameSpec spec);

  const GameSpec& spec() const { return spec_; }

  std::pair<GameState, Observation> reset() const;
  StepResult step(const GameState& state, std::string_view action) const;

  // Minimal number of actions from `state` to completion.
  int distance(const GameState& state) const;
  Walkthrough oracle_walkthrough() const;
  // Mean number of state-changing commands (navigation + every template
  // instantiation) over the states the oracle walkthrough passes through.
  double branching_factor() const;

  std::size_t reachable_states() const { return distance_.size(); }
  // Navigation commands plus all template instantiations over spec objects.
  const std::vector<std::string>& command_set() const { return commands_; }
  // Commands that change the world state in `state`, sorted.
  std::vector<std::string> effective_commands(const GameState& state) const;

  std::string describe(const GameState& state, std::string_view feedback) const;

 private:
  struct Outcome {
    GameState state;
    std::string feedback;
    std::vector<Event> events;
  };
  Outcome apply(const GameState& state, std::string_view action) const;
  void advance_quest(GameState& state) const;
  bool step_satisfied(const QuestStep& step, const GameState& state) const;
  bool visible(const GameState& state, int object) const;
  GameState initial_state() const;
  void build_distance_table();

  GameSpec spec_;
  std::vector<std::string> commands_;
  std::unordered_map<std::string, int> distance_;
};

// Free-function forms over a compiled Game.
inline std::pair<GameState, Observation> reset(const Game& game) { return game.reset(); }
inline StepResult step(const Game& game, const GameState& s, std::string_view a) {
  return game.step(s, a);
}

std::string spec_to_json(const GameSpec& spec);
GameSpec spec_from_json(std::string_view json);

std::string walkthrough_to_json(const Walkthrough& w);
Walkthrough walkthrough_from_json(std::string_view json);

}  // namespace kgtl::engine
