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

// Template filling and graph-based action pruning.

#include <string>
#include <vector>

#include "kgtl/engine.hpp"
#include "kgtl/kgraph.hpp"

namespace kgtl::act {

inline constexpr int kDefaultPruneWidth = 40;

struct Action {
  std::string text;
  std::vector<std::string> objects;  // slot fillers in pattern order
  bool operator==(const Action&) const = default;
};

enum class Origin { kFull, kPruned };

struct ActionSet {
  std::vector<Action> actions;
  Origin origin = Origin::kFull;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  std::vector<std::string> texts() const;
  bool contains(const std::string& text) const;
};

// Every instantiation of every template over `objects`, sorted by text.
ActionSet fill_templates(const std::vector<ActionTemplate>& templates,
                         const std::vector<std::string>& objects);

// Templated actions of a spec.
ActionSet full_action_set(const engine::GameSpec& spec);

// Ranking score used by pruning; exposed for tests.
int action_score(const kg::KnowledgeGraph& graph, const Action& action);

ActionSet prune_actions(const kg::KnowledgeGraph& graph, const ActionSet& full, int k);

// "go D" for each direction the graph records as an exit of the player's room.
std::vector<std::string> known_exits(const kg::KnowledgeGraph& graph);

// Sorted, de-duplicated union of known exits and the pruned set.
std::vector<std::string> candidate_actions(const kg::KnowledgeGraph& graph, const ActionSet& full,
                                           int k);

// Navigation commands plus the full templated set; the exploration pool.
std::vector<std::string> exploration_actions(const ActionSet& full);

}  // namespace kgtl::act
