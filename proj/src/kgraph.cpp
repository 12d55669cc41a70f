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

#include "kgtl/kgraph.hpp"

#include <algorithm>
#include <deque>
#include <regex>

#include "kgtl/common.hpp"

namespace kgtl::kg {

std::string_view provenance_name(Provenance p) {
  return p == Provenance::kSeeded ? "seeded" : "observed";
}

const std::vector<std::string>& affordance_verbs() {
  static const std::vector<std::string> verbs = {
      "banish", "burn", "carry", "contain", "cut",    "fit",  "hold", "light",
      "open",   "protect", "put", "read",   "reveal", "take", "unlock", "ward", "wear"};
  return verbs;
}

const std::vector<std::string>& relation_vocabulary() {
  static const std::vector<std::string> rels = [] {
    std::vector<std::string> r = {std::string(rel::kLocatedIn), std::string(rel::kHave),
                                  std::string(rel::kIs), std::string(rel::kPartOf)};
    for (int d = 0; d < engine::kNumDirections; ++d)
      r.push_back(std::string(rel::kConnectsPrefix) +
                  std::string(engine::direction_name(static_cast<engine::Direction>(d))));
    for (const auto& v : affordance_verbs()) r.push_back(std::string(rel::kCanPrefix) + v);
    std::sort(r.begin(), r.end());
    return r;
  }();
  return rels;
}

bool is_valid_relation(std::string_view relation) {
  const auto& v = relation_vocabulary();
  return std::binary_search(v.begin(), v.end(), relation);
}

// ---------------------------------------------------------------------------

KnowledgeGraph::KnowledgeGraph(std::vector<Triple> triples) {
  std::sort(triples.begin(), triples.end());
  // Keep one copy per (s, r, o); seeded wins over observed.
  for (auto& t : triples) {
    KGTL_REQUIRE(!t.subject.empty() && !t.object.empty(), "triple with empty subject or object");
    KGTL_REQUIRE(is_valid_relation(t.relation), "relation outside the closed vocabulary: " + t.relation);
    if (!triples_.empty() && triples_.back().key() == t.key()) {
      if (t.provenance == Provenance::kSeeded) triples_.back().provenance = Provenance::kSeeded;
      continue;
    }
    triples_.push_back(std::move(t));
  }
}

const Triple* KnowledgeGraph::find(std::string_view s, std::string_view r, std::string_view o) const {
  auto it = std::lower_bound(triples_.begin(), triples_.end(), std::make_tuple(s, r, o),
                             [](const Triple& t, const auto& k) {
                               return std::make_tuple(std::string_view(t.subject),
                                                      std::string_view(t.relation),
                                                      std::string_view(t.object)) < k;
                             });
  if (it != triples_.end() && it->subject == s && it->relation == r && it->object == o) return &*it;
  return nullptr;
}

bool KnowledgeGraph::contains(std::string_view s, std::string_view r, std::string_view o) const {
  return find(s, r, o) != nullptr;
}

std::vector<std::string> KnowledgeGraph::nodes() const {
  std::set<std::string> n;
  for (const auto& t : triples_) {
    n.insert(t.subject);
    n.insert(t.object);
  }
  return {n.begin(), n.end()};
}

bool KnowledgeGraph::has_node(std::string_view name) const {
  for (const auto& t : triples_)
    if (t.subject == name || t.object == name) return true;
  return false;
}

std::optional<std::string> KnowledgeGraph::player_location() const {
  for (const auto& t : triples_)
    if (t.subject == kPlayer && t.relation == rel::kLocatedIn) return t.object;
  return std::nullopt;
}

int KnowledgeGraph::component_count() const {
  Adjacency adj(*this);
  std::set<std::string> seen;
  int comps = 0;
  for (const auto& n : nodes()) {
    if (seen.count(n)) continue;
    ++comps;
    std::deque<std::string> q{n};
    seen.insert(n);
    while (!q.empty()) {
      auto cur = q.front();
      q.pop_front();
      for (const auto& m : adj.neighbours(cur))
        if (seen.insert(m).second) q.push_back(m);
    }
  }
  return comps;
}

std::string KnowledgeGraph::to_tsv() const {
  std::string out;
  for (const auto& t : triples_) {
    out += t.subject;
    out += '\t';
    out += t.relation;
    out += '\t';
    out += t.object;
    out += '\t';
    out += provenance_name(t.provenance);
    out += '\n';
  }
  return out;
}

KnowledgeGraph KnowledgeGraph::from_tsv(std::string_view text) {
  std::vector<Triple> triples;
  int line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 4)
      fail(ErrorCode::kFormat, "graph line " + std::to_string(line_no) + ": expected 4 columns");
    Provenance p;
    if (cols[3] == "observed") p = Provenance::kObserved;
    else if (cols[3] == "seeded") p = Provenance::kSeeded;
    else fail(ErrorCode::kFormat, "graph line " + std::to_string(line_no) + ": bad provenance");
    if (!is_valid_relation(cols[1]))
      fail(ErrorCode::kFormat, "graph line " + std::to_string(line_no) + ": unknown relation " + cols[1]);
    triples.push_back({cols[0], cols[1], cols[2], p});
  }
  return KnowledgeGraph(std::move(triples));
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

std::vector<std::string> sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?' || c == '\n') {
      auto t = trim(cur);
      if (!t.empty()) out.push_back(to_lower(t));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  auto t = trim(cur);
  if (!t.empty()) out.push_back(to_lower(t));
  return out;
}

bool is_pronoun(const std::string& w) {
  static const std::set<std::string> p = {"it", "that", "this", "there", "you", "they", "he",
                                           "she", "we", "i", "nothing", "something"};
  return p.count(w) != 0;
}

struct Rules {
  std::regex room{R"(^you are in (.+)$)"};
  std::regex here{R"(^there is (.+) here$)"};
  std::regex inside{R"(^in (.+) there is (.+)$)"};
  std::regex exits{R"(^exits:\s*(.+)$)"};
  std::regex have{R"(^you have (?:a|an|the) (.+)$)"};
  std::regex part_of{R"(^(.+) is part of (.+)$)"};
  std::regex can{R"(^(.+?) can ([a-z]+) (.+)$)"};
  std::regex opens{R"(^(.+?) opens (.+)$)"};
  std::regex is{R"(^(.+?) (?:is|are) (.+)$)"};
};

const Rules& rules() {
  static const Rules r;
  return r;
}

}  // namespace

std::vector<Triple> extract_text(std::string_view text, std::string_view current_room,
                                 Provenance provenance) {
  const Rules& R = rules();
  std::vector<Triple> out;
  std::string room = normalize_entity(current_room);
  auto add = [&](std::string s, std::string r, std::string o) {
    if (s.empty() || o.empty()) return;
    out.push_back({std::move(s), std::move(r), std::move(o), provenance});
  };
  // Room sentences come first in the grammar, but scan for one up front so
  // rule order inside the text does not matter.
  for (const auto& s : sentences(text)) {
    std::smatch m;
    if (std::regex_match(s, m, R.room)) room = normalize_entity(m[1].str());
  }
  for (const auto& s : sentences(text)) {
    std::smatch m;
    if (std::regex_match(s, m, R.room)) {
      add(std::string(kPlayer), std::string(rel::kLocatedIn), normalize_entity(m[1].str()));
    } else if (std::regex_match(s, m, R.here)) {
      if (!room.empty()) add(normalize_entity(m[1].str()), std::string(rel::kLocatedIn), room);
    } else if (std::regex_match(s, m, R.inside)) {
      add(normalize_entity(m[2].str()), std::string(rel::kLocatedIn), normalize_entity(m[1].str()));
    } else if (std::regex_match(s, m, R.exits)) {
      if (room.empty()) continue;
      for (const auto& part : split(m[1].str(), ',')) {
        const std::string d = trim(part);
        if (engine::parse_direction(d))
          add(room, std::string(rel::kConnectsPrefix) + d, std::string(kUnknownNode));
      }
    } else if (std::regex_match(s, m, R.have)) {
      add(std::string(kPlayer), std::string(rel::kHave), normalize_entity(m[1].str()));
    } else if (std::regex_match(s, m, R.part_of)) {
      add(normalize_entity(m[1].str()), std::string(rel::kPartOf), normalize_entity(m[2].str()));
    } else if (std::regex_match(s, m, R.can)) {
      const std::string verb = m[2].str();
      const auto& verbs = affordance_verbs();
      const std::string subj = normalize_entity(m[1].str());
      if (std::find(verbs.begin(), verbs.end(), verb) != verbs.end() && !is_pronoun(subj))
        add(subj, std::string(rel::kCanPrefix) + verb, normalize_entity(m[3].str()));
    } else if (std::regex_match(s, m, R.opens)) {
      const std::string subj = normalize_entity(m[1].str());
      if (!is_pronoun(subj)) add(subj, std::string(rel::kCanPrefix) + "open", normalize_entity(m[2].str()));
    } else if (std::regex_match(s, m, R.is)) {
      const std::string subj = normalize_entity(m[1].str());
      if (subj.empty() || is_pronoun(split(subj, ' ')[0])) continue;
      add(subj, std::string(rel::kIs), normalize_entity(m[2].str()));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Triple& a, const Triple& b) { return a.key() == b.key(); }),
            out.end());
  return out;
}

std::vector<Triple> extract_triples(const engine::Observation& observation,
                                    std::string_view current_room) {
  std::vector<Triple> out = extract_text(observation.text, current_room, Provenance::kObserved);
  for (const auto& e : observation.events) {
    switch (e.kind) {
      case engine::EventKind::kMoved: {
        const auto d = engine::parse_direction(e.direction);
        if (!d || e.from.empty() || e.to.empty()) break;
        out.push_back({normalize_entity(e.from), std::string(rel::kConnectsPrefix) + e.direction,
                       normalize_entity(e.to), Provenance::kObserved});
        out.push_back({normalize_entity(e.to),
                       std::string(rel::kConnectsPrefix) +
                           std::string(engine::direction_name(engine::opposite(*d))),
                       normalize_entity(e.from), Provenance::kObserved});
        break;
      }
      case engine::EventKind::kTook:
        out.push_back({std::string(kPlayer), std::string(rel::kHave), normalize_entity(e.subject),
                       Provenance::kObserved});
        break;
      default:
        break;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Triple& a, const Triple& b) { return a.key() == b.key(); }),
            out.end());
  return out;
}

KnowledgeGraph update_graph(const KnowledgeGraph& graph, const std::vector<Triple>& added) {
  if (added.empty()) return graph;
  std::optional<std::string> new_location;
  std::set<std::string> now_held;
  for (const auto& t : added) {
    if (t.subject == kPlayer && t.relation == rel::kLocatedIn) {
      if (!new_location || t.object > *new_location) new_location = t.object;
    }
    if (t.subject == kPlayer && t.relation == rel::kHave) now_held.insert(t.object);
  }
  std::vector<Triple> next;
  next.reserve(graph.size() + added.size());
  for (const auto& t : graph.triples()) {
    if (t.provenance == Provenance::kObserved) {
      if (new_location && t.subject == kPlayer && t.relation == rel::kLocatedIn) continue;
      if (t.relation == rel::kLocatedIn && now_held.count(t.subject)) continue;
    }
    next.push_back(t);
  }
  for (const auto& t : added) {
    if (t.subject == kPlayer && t.relation == rel::kLocatedIn && t.object != *new_location) continue;
    next.push_back(t);
  }
  return KnowledgeGraph(std::move(next));
}

KnowledgeGraph seed_graph_from_guide(std::string_view guide_text) {
  std::vector<Triple> kept;
  for (auto& t : extract_text(guide_text, "", Provenance::kSeeded)) {
    // Guides carry no map: drop anything about the player or room links.
    if (t.subject == kPlayer || t.object == kPlayer) continue;
    if (t.relation.rfind(rel::kConnectsPrefix, 0) == 0) continue;
    kept.push_back(std::move(t));
  }
  return KnowledgeGraph(std::move(kept));
}

KnowledgeGraph seed_graph_from_guide_file(const std::string& path) {
  return seed_graph_from_guide(read_file(path));
}

KnowledgeGraph seed(const KnowledgeGraph& graph, const KnowledgeGraph& seed_graph) {
  for (const auto& t : seed_graph.triples())
    KGTL_REQUIRE(t.provenance == Provenance::kSeeded, "seed graph contains observed triples");
  std::vector<Triple> all = graph.triples();
  all.insert(all.end(), seed_graph.triples().begin(), seed_graph.triples().end());
  return KnowledgeGraph(std::move(all));
}

KnowledgeGraph graph_from_walkthrough(const engine::Walkthrough& trace, const KnowledgeGraph& initial) {
  KnowledgeGraph g = initial;
  std::string room;
  auto absorb = [&](const engine::Observation& obs) {
    g = update_graph(g, extract_triples(obs, room));
    if (auto loc = g.player_location()) room = *loc;
  };
  for (const auto& step : trace.steps) absorb(step.observation);
  absorb(trace.final_observation);
  return g;
}

// ---------------------------------------------------------------------------

Adjacency::Adjacency(const KnowledgeGraph& graph) {
  for (const auto& t : graph.triples()) {
    adj_[t.subject];
    adj_[t.object];
    if (t.subject == t.object) continue;
    adj_[t.subject].insert(t.object);
    adj_[t.object].insert(t.subject);
  }
}

const std::set<std::string>& Adjacency::neighbours(const std::string& n) const {
  static const std::set<std::string> empty;
  auto it = adj_.find(n);
  return it == adj_.end() ? empty : it->second;
}

int Adjacency::distance(const std::string& a, const std::string& b, int cap) const {
  if (!has_node(a) || !has_node(b)) return cap + 1;
  if (a == b) return 0;
  std::set<std::string> frontier{a}, seen{a};
  for (int d = 1; d <= cap; ++d) {
    std::set<std::string> next;
    for (const auto& n : frontier)
      for (const auto& m : neighbours(n)) {
        if (m == b) return d;
        if (seen.insert(m).second) next.insert(m);
      }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return cap + 1;
}

}  // namespace kgtl::kg
