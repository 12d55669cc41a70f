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

#include <json.hpp>

#include "kgtl/common.hpp"
#include "kgtl/engine.hpp"

namespace kgtl::engine {

using nlohmann::json;

namespace {

std::string_view step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::kGo: return "go";
    case StepKind::kTake: return "take";
    case StepKind::kOpen: return "open";
    case StepKind::kUnlock: return "unlock";
    case StepKind::kPut: return "put";
  }
  return "go";
}

StepKind parse_step_kind(const std::string& s) {
  for (auto k : {StepKind::kGo, StepKind::kTake, StepKind::kOpen, StepKind::kUnlock, StepKind::kPut})
    if (step_kind_name(k) == s) return k;
  fail(ErrorCode::kFormat, "unknown quest step kind: " + s);
}

json location_json(const Location& l) {
  switch (l.kind) {
    case Location::Kind::kRoom: return {{"room", l.index}};
    case Location::Kind::kContainer: return {{"container", l.index}};
    case Location::Kind::kInventory: return {{"inventory", true}};
  }
  return {};
}

Location location_from(const json& j) {
  if (j.contains("room")) return Location::room(j.at("room").get<int>());
  if (j.contains("container")) return Location::inside(j.at("container").get<int>());
  if (j.contains("inventory")) return Location::inventory();
  fail(ErrorCode::kFormat, "bad object location");
}

json event_json(const Event& e) {
  json j{{"kind", std::string(event_kind_name(e.kind))}};
  if (!e.subject.empty()) j["subject"] = e.subject;
  if (!e.object.empty()) j["object"] = e.object;
  if (!e.from.empty()) j["from"] = e.from;
  if (!e.to.empty()) j["to"] = e.to;
  if (!e.direction.empty()) j["direction"] = e.direction;
  return j;
}

Event event_from(const json& j) {
  Event e;
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.subject = j.value("subject", "");
  e.object = j.value("object", "");
  e.from = j.value("from", "");
  e.to = j.value("to", "");
  e.direction = j.value("direction", "");
  return e;
}

json observation_json(const Observation& o) {
  json events = json::array();
  for (const auto& e : o.events) events.push_back(event_json(e));
  return {{"text", o.text}, {"events", events}};
}

Observation observation_from(const json& j) {
  Observation o;
  o.text = j.at("text").get<std::string>();
  for (const auto& e : j.value("events", json::array())) o.events.push_back(event_from(e));
  return o;
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string spec_to_json(const GameSpec& spec) {
  json rooms = json::array();
  for (const auto& r : spec.rooms) {
    json exits = json::object();
    for (int d = 0; d < kNumDirections; ++d)
      if (r.exits[d] >= 0) exits[std::string(direction_name(static_cast<Direction>(d)))] = r.exits[d];
    rooms.push_back({{"name", r.name}, {"exits", exits}});
  }
  json objects = json::array();
  for (const auto& o : spec.objects) {
    json tags = json::array();
    if (o.takeable) tags.push_back("takeable");
    if (o.container) tags.push_back("container");
    if (o.locked) tags.push_back("locked");
    if (o.hidden) tags.push_back("hidden");
    json jo{{"name", o.name}, {"adjectives", o.adjectives}, {"location", location_json(o.initial)},
            {"tags", tags}};
    if (o.key >= 0) jo["key"] = o.key;
    objects.push_back(std::move(jo));
  }
  json quest = json::array();
  for (const auto& s : spec.quest)
    quest.push_back({{"kind", std::string(step_kind_name(s.kind))},
                     {"action", s.action},
                     {"room", s.room},
                     {"object", s.object},
                     {"target", s.target}});
  json templates = json::array();
  for (const auto& t : spec.templates) templates.push_back({{"pattern", t.pattern}, {"verb", t.verb}});
  json j{{"format", "kgtl-game"},
         {"version", 1},
         {"theme", std::string(theme_name(spec.theme))},
         {"seed", spec.seed},
         {"start_room", spec.start_room},
         {"rooms", rooms},
         {"objects", objects},
         {"quest", quest},
         {"vocabulary", spec.vocabulary},
         {"templates", templates},
         {"completion_reward", spec.completion_reward}};
  return j.dump(2) + "\n";
}

GameSpec spec_from_json(std::string_view text) {
  return guarded([&] {
    const json j = json::parse(text);
    if (j.value("format", "") != "kgtl-game")
      fail(ErrorCode::kFormat, "not a kgtl game document");
    if (j.value("version", 0) != 1) fail(ErrorCode::kFormat, "unsupported game document version");
    GameSpec s;
    s.theme = parse_theme(j.at("theme").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.start_room = j.at("start_room").get<int>();
    for (const auto& r : j.at("rooms")) {
      Room room;
      room.name = r.at("name").get<std::string>();
      for (auto& [dir, to] : r.at("exits").items()) {
        auto d = parse_direction(dir);
        if (!d) fail(ErrorCode::kFormat, "unknown direction: " + dir);
        room.exits[static_cast<int>(*d)] = to.get<int>();
      }
      s.rooms.push_back(std::move(room));
    }
    for (const auto& o : j.at("objects")) {
      GameObject obj;
      obj.name = o.at("name").get<std::string>();
      obj.adjectives = o.value("adjectives", std::vector<std::string>{});
      obj.initial = location_from(o.at("location"));
      for (const auto& t : o.value("tags", json::array())) {
        const auto tag = t.get<std::string>();
        if (tag == "takeable") obj.takeable = true;
        else if (tag == "container") obj.container = true;
        else if (tag == "locked") obj.locked = true;
        else if (tag == "hidden") obj.hidden = true;
        else fail(ErrorCode::kFormat, "unknown object tag: " + tag);
      }
      obj.key = o.value("key", -1);
      s.objects.push_back(std::move(obj));
    }
    for (const auto& q : j.at("quest")) {
      QuestStep step;
      step.kind = parse_step_kind(q.at("kind").get<std::string>());
      step.action = q.at("action").get<std::string>();
      step.room = q.value("room", -1);
      step.object = q.value("object", -1);
      step.target = q.value("target", -1);
      s.quest.push_back(std::move(step));
    }
    s.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    for (const auto& t : j.at("templates"))
      s.templates.push_back({t.at("pattern").get<std::string>(), t.at("verb").get<std::string>()});
    s.completion_reward = j.value("completion_reward", 2.0);
    return s;
  });
}

std::string walkthrough_to_json(const Walkthrough& w) {
  json steps = json::array();
  for (const auto& s : w.steps)
    steps.push_back({{"observation", observation_json(s.observation)},
                     {"action", s.action},
                     {"room", s.room},
                     {"quest_index", s.quest_index}});
  json j{{"format", "kgtl-trace"},
         {"version", 1},
         {"steps", steps},
         {"final_observation", observation_json(w.final_observation)}};
  return j.dump(2) + "\n";
}

Walkthrough walkthrough_from_json(std::string_view text) {
  return guarded([&] {
    const json j = json::parse(text);
    if (j.value("format", "") != "kgtl-trace") fail(ErrorCode::kFormat, "not a kgtl trace document");
    Walkthrough w;
    for (const auto& s : j.at("steps"))
      w.steps.push_back({observation_from(s.at("observation")), s.at("action").get<std::string>(),
                         s.value("room", 0), s.value("quest_index", 0)});
    w.final_observation = observation_from(j.at("final_observation"));
    return w;
  });
}

}  // namespace kgtl::engine
