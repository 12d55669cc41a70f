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

// DQN agent: modified epsilon-greedy over graph-pruned actions, two-bucket
// prioritized replay, TD targets from the live network.

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kgtl/actspace.hpp"
#include "kgtl/engine.hpp"
#include "kgtl/kgraph.hpp"
#include "kgtl/qnet.hpp"
#include "kgtl/transfer.hpp"

namespace kgtl::agent {

enum class RewardMode { kSparse, kDense };
std::string_view reward_mode_name(RewardMode m);
RewardMode parse_reward_mode(std::string_view s);

struct TrainConfig {
  double gamma = 0.5;
  double epsilon_start = 1.0;
  double epsilon_end = 0.1;
  int epsilon_decay_episodes = 60;
  double lr = 0.5;
  double grad_clip = 5.0;
  int batch_size = 16;
  int replay_capacity = 10000;
  double rho = 0.25;
  int episode_cap = 200;
  int step_cap = 50;
  int prune_k = act::kDefaultPruneWidth;
  std::uint64_t seed = 1;
  RewardMode reward_mode = RewardMode::kDense;
  int dim = 0;  // 0: 50 for house, 100 for haunt
  // Convergence: moving average over `window` episodes changes by less than
  // `tolerance` (relative) for `patience` consecutive episodes.
  int convergence_window = 20;
  int convergence_patience = 30;
  double convergence_tolerance = 0.01;
  bool stop_on_convergence = true;
  int checkpoint_every = 0;  // save parameters every N episodes when > 0
  std::string checkpoint_dir;

  void validate() const;
  double epsilon(int episode) const;  // episode is 0-based
};

int default_dim(engine::Theme theme);

struct Transition {
  std::shared_ptr<const kg::KnowledgeGraph> graph;
  std::string observation;
  std::string action;
  double reward = 0.0;
  std::shared_ptr<const kg::KnowledgeGraph> next_graph;
  std::string next_observation;
  std::vector<std::string> next_actions;
  bool done = false;
};

class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, double rho);
  void add(Transition t);
  // ceil(rho * n) draws from the positive bucket when it is non-empty, the
  // rest uniformly from the other bucket; draws are with replacement.
  std::vector<const Transition*> sample(int n, Rng& rng) const;
  std::size_t size() const { return positive_.size() + other_.size(); }
  std::size_t positive_size() const { return positive_.size(); }
  std::size_t other_size() const { return other_.size(); }

 private:
  int capacity_;
  double rho_;
  std::deque<Transition> positive_;
  std::deque<Transition> other_;
};

// Q-values of every candidate in state (graph, observation).
std::vector<double> q_values(const qnet::Parameters& params, const kg::KnowledgeGraph& graph,
                             std::string_view observation, const std::vector<std::string>& actions);

// With probability epsilon a uniform draw from `full`; otherwise the argmax
// over `pruned`, ties going to the lexicographically first action.
std::string select_action(const qnet::Parameters& params, const kg::KnowledgeGraph& graph,
                          std::string_view observation, const std::vector<std::string>& pruned,
                          const std::vector<std::string>& full, double epsilon, Rng& rng);

double td_target(const Transition& t, const qnet::Parameters& params, double gamma);

// Mean squared TD error over the batch, recorded on `tape`. Targets are
// constants computed from the tape's parameters.
qnet::Var td_loss(qnet::Tape& tape, const std::vector<const Transition*>& batch, double gamma);

struct EpisodeRecord {
  int episode = 0;  // 1-based
  double total_reward = 0.0;
  int steps = 0;
  double epsilon = 0.0;
  double loss_mean = 0.0;
  bool done = false;
};

class ConvergenceMonitor {
 public:
  ConvergenceMonitor(int window, int patience, double tolerance);
  // Returns true once the criterion has fired.
  bool push(double episode_reward);
  bool converged() const { return fired_at_ > 0; }
  int fired_at() const { return fired_at_; }  // 1-based episode, 0 if never
  double moving_average() const { return ma_; }

 private:
  int window_, patience_;
  double tolerance_;
  std::deque<double> recent_;
  double sum_ = 0.0;
  double ma_ = 0.0;
  bool have_ma_ = false;
  int streak_ = 0;
  int count_ = 0;
  int fired_at_ = 0;
};

struct EpisodeLog {
  std::vector<EpisodeRecord> episodes;
  bool converged = false;
  int converged_episode = 0;
  std::string stop_condition;  // "converged" or "episode_cap"

  std::string to_csv() const;
  static EpisodeLog from_csv(std::string_view text);
  std::string meta_json() const;
  std::vector<double> rewards() const;
};

struct TrainResult {
  qnet::Parameters params;
  EpisodeLog log;
};

struct TrainInputs {
  const qnet::Parameters* init = nullptr;  // fresh parameters when null
  const kg::KnowledgeGraph* seed_graph = nullptr;
  const transfer::CheckpointSet* checkpoints = nullptr;  // dense bonus source
};

TrainResult train(const engine::GameSpec& spec, const TrainConfig& cfg, const TrainInputs& inputs = {});

struct Metrics {
  double mean_reward = 0.0;
  double mean_steps = 0.0;
  double std_reward = 0.0;  // population standard deviation
  double std_steps = 0.0;
  double completion_rate = 0.0;
  std::vector<double> rewards;
  std::vector<int> steps;
};

Metrics summarize(const std::vector<double>& rewards, const std::vector<int>& steps, int completed);

struct EvalOptions {
  int episodes = 50;
  double epsilon = 0.1;
  std::uint64_t seed = 1;
  int step_cap = 50;
  int prune_k = act::kDefaultPruneWidth;
  RewardMode reward_mode = RewardMode::kDense;
  const kg::KnowledgeGraph* seed_graph = nullptr;
  const transfer::CheckpointSet* checkpoints = nullptr;
};

Metrics evaluate(const engine::GameSpec& spec, const qnet::Parameters& params, const EvalOptions& options = {});

// Network vocabulary for a game: its own words plus any seed-graph words.
std::vector<std::string> network_vocabulary(const engine::GameSpec& spec, const kg::KnowledgeGraph* seed_graph);

}  // namespace kgtl::agent
