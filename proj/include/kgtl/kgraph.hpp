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

// Knowledge-graph state representation: rule-based triple extraction over the
// engine's observation grammar and over free guide text, plus the update and
// seeding rules that keep the graph consistent as the agent explores.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgtl/engine.hpp"

namespace kgtl::kg {

enum class Provenance { kObserved, kSeeded };
std::string_view provenance_name(Provenance p);

inline constexpr std::string_view kPlayer = "you";
inline constexpr std::string_view kUnknownNode = "?unknown";

namespace rel {
inline constexpr std::string_view kLocatedIn = "located-in";
inline constexpr std::string_view kHave = "have";
inline constexpr std::string_view kIs = "is";
inline constexpr std::string_view kPartOf = "part-of";
inline constexpr std::string_view kConnectsPrefix = "connects-";
inline constexpr std::string_view kCanPrefix = "can-";
}  // namespace rel

// Verbs admitted in can-<verb> relations.
const std::vector<std::string>& affordance_verbs();
// Every relation string the closed vocabulary admits, sorted.
const std::vector<std::string>& relation_vocabulary();
bool is_valid_relation(std::string_view relation);

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
  Provenance provenance = Provenance::kObserved;

  // Identity ignores provenance.
  auto key() const { return std::tie(subject, relation, object); }
  bool operator<(const Triple& o) const { return key() < o.key(); }
  bool operator==(const Triple& o) const {
    return key() == o.key() && provenance == o.provenance;
  }
};

// Immutable set of triples. Operations return new graphs.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  explicit KnowledgeGraph(std::vector<Triple> triples);

  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  bool contains(std::string_view s, std::string_view r, std::string_view o) const;
  const Triple* find(std::string_view s, std::string_view r, std::string_view o) const;

  // Sorted unique subject/object names.
  std::vector<std::string> nodes() const;
  bool has_node(std::string_view name) const;
  std::optional<std::string> player_location() const;

  // Number of connected components, edges taken as undirected.
  int component_count() const;

  std::string to_tsv() const;
  static KnowledgeGraph from_tsv(std::string_view text);

  bool operator==(const KnowledgeGraph&) const = default;

 private:
  std::vector<Triple> triples_;  // sorted by (s, r, o), unique
};

// Observation extraction. `current_room` is the room the player was in when
// the action was issued; the room sentence of the observation, if present,
// takes precedence for object placement and exits.
std::vector<Triple> extract_triples(const engine::Observation& observation,
                                    std::string_view current_room);

// Text-only rules (no events, no room context) tagged with `provenance`.
std::vector<Triple> extract_text(std::string_view text, std::string_view current_room,
                                 Provenance provenance);

// Union with replacement: a new <you, located-in, R> drops the previous one,
// and <you, have, X> drops observed <X, located-in, *>. Seeded triples are
// never removed.
KnowledgeGraph update_graph(const KnowledgeGraph& graph, const std::vector<Triple>& added);

KnowledgeGraph seed_graph_from_guide(std::string_view guide_text);
KnowledgeGraph seed_graph_from_guide_file(const std::string& path);
KnowledgeGraph seed(const KnowledgeGraph& graph, const KnowledgeGraph& seed_graph);

// Replays a walkthrough through the extractor, starting from `initial`.
KnowledgeGraph graph_from_walkthrough(const engine::Walkthrough& trace,
                                      const KnowledgeGraph& initial = {});

// Undirected neighbourhood view used by pruning and the encoder.
class Adjacency {
 public:
  explicit Adjacency(const KnowledgeGraph& graph);
  bool has_node(const std::string& n) const { return adj_.count(n) != 0; }
  // Shortest undirected path length, capped: returns a value > cap when farther.
  int distance(const std::string& a, const std::string& b, int cap) const;
  const std::set<std::string>& neighbours(const std::string& n) const;

 private:
  std::map<std::string, std::set<std::string>> adj_;
};

}  // namespace kgtl::kg
