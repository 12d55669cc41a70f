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

// Ablation experiments: arm pipelines, per-seed runs on a worker pool,
// results tables, significance tests, reward curves and game statistics.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgtl/agent.hpp"
#include "kgtl/engine.hpp"
#include "kgtl/transfer.hpp"

namespace kgtl::harness {

inline constexpr int kSchemaVersion = 1;

enum class Arm { kNoTransfer, kQa, kSeeded, kFull, kUntuned };
std::string_view arm_name(Arm a);
Arm parse_arm(std::string_view s);

// Training-config overrides as a JSON object over `base`; unknown keys are
// config errors.
agent::TrainConfig train_config_from_json(std::string_view text, agent::TrainConfig base = {});
std::string train_config_to_json(const agent::TrainConfig& cfg);

struct ArmSpec {
  Arm arm = Arm::kNoTransfer;
  agent::RewardMode reward_mode = agent::RewardMode::kDense;
  // Label used for file names and table rows; defaults to "<arm>" or
  // "<arm>-<mode>" when the same arm appears under both reward modes.
  std::string label;
};

struct PretrainConfig {
  int games = 50;
  int rooms = 10;
  int quest_len = 5;
  std::uint64_t corpus_seed = 1;
  int epochs = transfer::PretrainOptions{}.epochs;
  double lr = transfer::PretrainOptions{}.lr;
};

// Corpus generation plus ranking pretraining. The network vocabulary covers
// every corpus game and the seed graph; `seed` drives initialisation and
// example order.
transfer::PretrainResult pretrain_on_corpus(engine::Theme theme, const PretrainConfig& cfg, std::uint64_t seed,
                                            int dim, int prune_k, const kg::KnowledgeGraph* seed_graph);

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string name = "experiment";
  std::string source_spec;  // required by full and untuned
  std::string target_spec;
  std::string guide;        // required by seeded, full and untuned
  std::vector<ArmSpec> arms;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  agent::TrainConfig train;         // target training
  agent::TrainConfig source_train;  // source training (full, untuned)
  PretrainConfig pretrain;
  int init_episodes = 50;
  int eval_episodes = 50;
  double bonus_scale = transfer::kDefaultBonus;
  int curve_window = 10;

  void validate() const;
  // Relative paths are resolved against `base_dir`.
  static ExperimentConfig from_json(std::string_view text, const std::string& base_dir = "");
  static ExperimentConfig load(const std::string& path);
  std::string to_json() const;
};

struct RunResult {
  std::string label;
  Arm arm = Arm::kNoTransfer;
  agent::RewardMode reward_mode = agent::RewardMode::kDense;
  std::uint64_t seed = 0;
  agent::EpisodeLog log;                // empty for untuned
  std::optional<agent::EpisodeLog> source_log;
  double init_reward = 0.0;
  agent::Metrics final_metrics;
  bool converged = false;

  std::string meta_json() const;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
  int n = 0;
};
Stat mean_std(const std::vector<double>& xs);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};
// Two-sided Welch test. Both samples need at least two values.
WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b);

struct ResultRow {
  std::string label;
  std::string game;
  Stat init_reward;
  Stat final_reward;
  Stat steps;
  int runs = 0;
  int converged = 0;
  std::optional<double> p_vs_baseline;  // final reward vs no-transfer
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::string to_csv() const;
  std::string to_markdown() const;
};

// Aggregates runs into rows, in the order arms first appear. Final reward and
// step cells are dashed when no run of the row converged.
ResultsTable tabulate(const std::vector<RunResult>& runs, const std::string& game);

struct ExperimentResult {
  std::vector<RunResult> runs;  // arm-major, seed-minor
  ResultsTable table;
};

// Runs every (arm, seed) pair on `jobs` workers, then writes logs, tables and
// curves under `out_dir` when it is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs, const std::string& out_dir);

// Single pipelines, exposed for the CLI and tests.
RunResult run_arm(const ExperimentConfig& cfg, const ArmSpec& arm, std::uint64_t seed);

struct CurvePoint {
  int episode = 0;
  double mean = 0.0;
  double std = 0.0;
  int runs = 0;
};
// Trailing moving average of each log (window w), then mean and population std
// across the logs that reach each episode.
std::vector<CurvePoint> curve(const std::vector<agent::EpisodeLog>& logs, int window);
std::string curve_csv(const std::vector<CurvePoint>& points, int window);
// Writes <out_dir>/<label>.csv for every label.
void emit_curves(const std::map<std::string, std::vector<agent::EpisodeLog>>& logs, int window,
                 const std::string& out_dir);
// Groups the "<label>_seed<k>.csv" logs of a runs directory by label.
std::map<std::string, std::vector<agent::EpisodeLog>> load_run_logs(const std::string& runs_dir);

struct GameStats {
  int vocab_size = 0;
  double branching_factor = 0.0;
  int rooms = 0;
  int completion_steps = 0;
  double words_per_observation = 0.0;
  double new_triples_per_observation = 0.0;
  double vocab_overlap = 0.0;  // percent
  double max_augmented_reward = 0.0;

  std::string to_json() const;
};

// Mean number of triples each observation adds to the graph built so far.
double new_triples_per_observation(const std::vector<engine::Observation>& observations);

GameStats game_stats(const engine::GameSpec& spec, const std::vector<engine::GameSpec>& domain,
                     double bonus_scale = transfer::kDefaultBonus);

}  // namespace kgtl::harness
