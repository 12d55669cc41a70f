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

// Transfer mechanisms: trace-supervised pretraining, parameter transfer
// between games, and oracle checkpoint rewards.

#include <optional>
#include <string>
#include <vector>

#include "kgtl/actspace.hpp"
#include "kgtl/engine.hpp"
#include "kgtl/kgraph.hpp"
#include "kgtl/qnet.hpp"

namespace kgtl::transfer {

inline constexpr double kDefaultBonus = 0.5;

struct Checkpoint {
  int room = 0;
  int quest_index = 0;
  std::string action;
  double bonus = kDefaultBonus;
  bool operator==(const Checkpoint&) const = default;
};

class CheckpointSet {
 public:
  CheckpointSet() = default;
  CheckpointSet(std::vector<Checkpoint> checkpoints, double scale);

  const std::vector<Checkpoint>& checkpoints() const { return checkpoints_; }
  double scale() const { return scale_; }
  std::size_t size() const { return checkpoints_.size(); }
  // Index of the checkpoint keyed by (room, quest_index, action), or -1.
  int find(int room, int quest_index, std::string_view action) const;

  std::string to_json() const;
  static CheckpointSet from_json(std::string_view text);

 private:
  std::vector<Checkpoint> checkpoints_;
  double scale_ = kDefaultBonus;
};

// One checkpoint per oracle step. 0 < scale < 1.
CheckpointSet make_checkpoints(const engine::Game& game, double scale = kDefaultBonus);
CheckpointSet make_checkpoints(const engine::GameSpec& spec, double scale = kDefaultBonus);

// Per-episode claim state; each checkpoint pays out once per episode.
class CheckpointTracker {
 public:
  explicit CheckpointTracker(const CheckpointSet* set = nullptr);
  void reset();
  // Bonus for taking `action` in symbolic state (room, quest_index).
  double augment_reward(int room, int quest_index, std::string_view action);

 private:
  const CheckpointSet* set_;
  std::vector<bool> claimed_;
};

// Largest episode reward under the built-in function plus every checkpoint.
double max_augmented_reward(const engine::GameSpec& spec, double scale = kDefaultBonus);

struct TraceCorpus {
  std::vector<engine::GameSpec> specs;
  std::vector<engine::Walkthrough> traces;
  std::vector<int> train;  // indices into specs/traces
  std::vector<int> test;

  std::vector<std::string> vocabulary() const;
};

struct CorpusOptions {
  int n_rooms = 10;
  int quest_len = 5;
  double vocab_scale = 1.0;
};

// n_games >= 5; 4:1 train/test split after a seeded shuffle.
TraceCorpus build_trace_corpus(engine::Theme theme, int n_games, std::uint64_t seed,
                               const CorpusOptions& options = {});
void save_corpus(const TraceCorpus& corpus, const std::string& dir);
TraceCorpus load_corpus(const std::string& dir);

struct PretrainOptions {
  int epochs = 40;
  double lr = 0.1;
  int prune_k = act::kDefaultPruneWidth;
  std::uint64_t seed = 1;
  const kg::KnowledgeGraph* seed_graph = nullptr;
};

struct RankingScore {
  double accuracy = 0.0;
  double random_baseline = 0.0;  // mean of 1/|candidates|
  int examples = 0;
};

struct PretrainResult {
  qnet::Parameters params;
  RankingScore before;  // held-out, initial parameters
  RankingScore after;   // held-out, trained parameters
  RankingScore train;   // training split, trained parameters
  std::vector<double> epoch_loss;
};

// One supervised example per oracle step: the graph built from the trace so
// far, the observation, and candidates = pruned set plus the gold action.
struct RankingExample {
  kg::KnowledgeGraph graph;
  std::string observation;
  std::vector<std::string> candidates;  // sorted
  int gold = 0;
};

std::vector<RankingExample> ranking_examples(const engine::GameSpec& spec, const engine::Walkthrough& trace,
                                             int prune_k, const kg::KnowledgeGraph* seed_graph);
RankingScore ranking_accuracy(const std::vector<RankingExample>& examples, const qnet::Parameters& params);

PretrainResult pretrain(const TraceCorpus& corpus, const qnet::Parameters& params,
                        const PretrainOptions& options = {});

// Copies fixed-shape segments verbatim and word rows for shared words; new
// words get fresh uniform(-0.05, 0.05) rows. Nothing is frozen.
qnet::Parameters transfer_parameters(const qnet::Parameters& source,
                                     const std::vector<std::string>& target_vocab, Rng& rng);

// |a ∩ domain| / |a| as a percentage.
double vocab_overlap(const std::vector<std::string>& vocab, const std::vector<std::string>& domain);

}  // namespace kgtl::transfer
