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

// Acceptance runner: one PASS/FAIL line per criterion.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "chain_mdp.hpp"
#include "kgtl/actspace.hpp"
#include "kgtl/agent.hpp"
#include "kgtl/common.hpp"
#include "kgtl/engine.hpp"
#include "kgtl/harness.hpp"
#include "kgtl/qnet.hpp"
#include "kgtl/transfer.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace kgtl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path benchmark_dir() { return fs::path(KGTL_DATA_ROOT) / "benchmark"; }

Outcome gradients() {
  const std::vector<std::string> words = {"you", "kitchen", "knife", "chest", "key", "open", "take", "unlock",
                                          "with", "is", "red", "hall", "unknown", "lamp", "go", "north"};
  const std::vector<std::string> names = {"you", "kitchen", "knife", "chest", "key", "hall", "lamp"};
  const std::vector<std::string> observations = {"You are in the kitchen. The chest is red.",
                                                 "There is a knife here. Exits: north.", "You take the lamp.",
                                                 "The hall is dark and the key is red."};
  const std::vector<std::string> actions = {"unlock chest with key", "take knife", "go north", "open chest",
                                            "take lamp"};
  Rng rng(2026);
  int done = 0, skipped = 0, checked = 0;
  double worst = 0.0;
  std::set<int> touched;
  for (int trial = 0; done < 100; ++trial) {
    const int dim = 3 + trial % 4;
    auto p = testing::random_params(words, dim, 1000 + trial);
    const auto g = testing::random_graph(rng, names, 2 + trial % 7);
    const auto& obs = observations[rng.index(observations.size())];
    const auto& act = actions[rng.index(actions.size())];
    const double target = rng.uniform(-1.0, 1.0);
    auto loss_of = [&](const qnet::Parameters& q) {
      qnet::Tape t(q, false);
      return t.scalar_value(
          t.squared_error(qnet::q_value(t, qnet::encode_state(t, g, obs), qnet::encode_action(t, act)), target));
    };
    qnet::Tape t(p, true);
    const qnet::Var l =
        t.squared_error(qnet::q_value(t, qnet::encode_state(t, g, obs), qnet::encode_action(t, act)), target);
    if (t.kink_margin() < 1e-2) {
      ++skipped;
      continue;
    }
    ++done;
    const auto grads = t.backward(l);
    const auto res = testing::check_gradients(p, loss_of, grads, rng, 20);
    worst = std::max(worst, res.max_rel_error);
    checked += res.checked;
    touched.insert(res.segments_touched.begin(), res.segments_touched.end());
  }
  const bool all_segments = static_cast<int>(touched.size()) == qnet::kNumSegments;
  return {worst <= 1e-4 && all_segments,
          fmt("100 configurations (%d skipped near the leaky-relu kink), %d coordinates, %zu/%d segments, "
              "max rel err %.2e",
              skipped, checked, touched.size(), qnet::kNumSegments, worst)};
}

Outcome chain() {
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) worst = std::max(worst, testing::fit_chain(0.9, seed).max_error);
  return {worst <= 1e-3, fmt("max |Q - Q*| over 3 seeds %.2e", worst)};
}

int bfs_solution_length(const engine::Game& g) {
  auto [start, obs] = g.reset();
  std::unordered_map<std::string, int> seen{{start.key(), 0}};
  std::deque<engine::GameState> queue{start};
  while (!queue.empty()) {
    const engine::GameState s = queue.front();
    queue.pop_front();
    const int d = seen[s.key()];
    for (const auto& cmd : g.command_set()) {
      const auto r = g.step(s, cmd);
      if (r.done) return d + 1;
      if (seen.emplace(r.state.key(), d + 1).second) queue.push_back(r.state);
    }
  }
  return -1;
}

Outcome oracle_minimality() {
  int ok = 0;
  for (int i = 0; i < 20; ++i) {
    const auto theme = i % 2 ? engine::Theme::kHaunt : engine::Theme::kHouse;
    const engine::Game g(engine::generate_game(theme, 500 + i, 3 + i % 5, 2 + i % 4, 1.0));
    ok += static_cast<int>(g.oracle_walkthrough().steps.size()) == bfs_solution_length(g);
  }
  return {ok == 20, fmt("%d/20 specs match BFS", ok)};
}

Outcome combinatorics() {
  int ok = 0;
  for (int i = 0; i < 10; ++i) {
    const auto theme = i % 2 ? engine::Theme::kHaunt : engine::Theme::kHouse;
    const auto spec = engine::generate_game(theme, 700 + i, 4 + i % 4, 2 + i % 3, 1.0);
    std::size_t expected = 0;
    for (const auto& t : spec.templates) {
      std::size_t n = 1;
      for (int k = 0; k < t.slots(); ++k) n *= spec.objects.size();
      expected += n;
    }
    const auto full = act::full_action_set(spec);
    const engine::Game game(spec);
    const auto graph = kg::graph_from_walkthrough(game.oracle_walkthrough());
    bool good = full.size() == expected;
    for (int k : {1, 10, 40}) {
      const auto pruned = act::prune_actions(graph, full, k);
      good = good && static_cast<int>(pruned.size()) <= k;
      for (const auto& a : pruned.actions) good = good && full.contains(a.text);
    }
    ok += good;
  }
  return {ok == 10, fmt("%d/10 specs: exact count, pruned subset with size <= k", ok)};
}

Outcome transfer_identity() {
  const auto spec = engine::generate_game(engine::Theme::kHouse, 11, 6, 4, 1.0);
  const auto vocab = agent::network_vocabulary(spec, nullptr);
  Rng rng(3);
  const auto source = qnet::init_params(vocab, agent::default_dim(spec.theme), rng);
  Rng trng(4);
  const auto target = transfer::transfer_parameters(source, vocab, trng);
  const auto actions = act::full_action_set(spec).texts();
  std::vector<std::string> names;
  for (const auto& o : spec.objects) names.push_back(o.name);
  for (const auto& r : spec.rooms) names.push_back(r.name);
  names.push_back("you");
  Rng probe(5);
  int same = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto g = testing::random_graph(probe, names, 1 + static_cast<int>(probe.index(10)));
    std::string obs;
    for (int w = 0; w < 8; ++w) obs += vocab[probe.index(vocab.size())] + " ";
    const std::vector<std::string> a = {actions[probe.index(actions.size())]};
    const double qs = agent::q_values(source, g, obs, a)[0];
    const double qt = agent::q_values(target, g, obs, a)[0];
    same += std::memcmp(&qs, &qt, sizeof qs) == 0;
  }
  return {same == 1000, fmt("%d/1000 probes bit-identical", same)};
}

Outcome bonus_bound() {
  const engine::Game game(engine::generate_game(engine::Theme::kHouse, 13, 6, 5, 1.0));
  const double scale = transfer::kDefaultBonus;
  const auto cps = transfer::make_checkpoints(game, scale);
  transfer::CheckpointTracker tracker(&cps);
  const auto& cmds = game.command_set();
  const auto trace = game.oracle_walkthrough();
  Rng rng(17);
  auto s = game.reset().first;
  int bad = 0, paid = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string a = cmds[rng.index(cmds.size())];
    if (rng.bernoulli(0.3)) a = trace.steps[rng.index(trace.steps.size())].action;
    const double b = tracker.augment_reward(s.room, s.quest_index, a);
    bad += !(b == 0.0 || b == scale);
    paid += b > 0.0;
    const auto r = game.step(s, a);
    s = r.state;
    if (r.done || i % 60 == 59) {
      s = game.reset().first;
      tracker.reset();
    }
  }
  return {bad == 0 && scale < 1.0, fmt("scale %.2f, %d/1000 bonuses outside {0, scale}, %d paid", scale, bad, paid)};
}

// First 1-based episode whose trailing moving average reaches `level`, or
// 0 if it never does.
int episodes_to_reach(const agent::EpisodeLog& log, double level, int window) {
  double sum = 0.0;
  const auto& eps = log.episodes;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    sum += eps[i].total_reward;
    if (i >= static_cast<std::size_t>(window)) sum -= eps[i - window].total_reward;
    const double n = static_cast<double>(std::min<std::size_t>(i + 1, window));
    if (sum / n >= level) return static_cast<int>(i) + 1;
  }
  return 0;
}

Outcome directional_transfer(int jobs, const fs::path& scratch) {
  auto cfg = harness::ExperimentConfig::load((benchmark_dir() / "transfer_house.json").string());
  cfg.arms = {{harness::Arm::kNoTransfer, agent::RewardMode::kDense, "no-transfer"},
              {harness::Arm::kFull, agent::RewardMode::kDense, "full"}};
  const auto source = engine::spec_from_json(read_file(cfg.source_spec));
  const auto target = engine::spec_from_json(read_file(cfg.target_spec));
  const double overlap = transfer::vocab_overlap(target.vocabulary, source.vocabulary);
  const auto result = harness::run_experiment(cfg, jobs, (scratch / "transfer").string());
  const std::size_t n = cfg.seeds.size();
  int wins = 0;
  std::string detail = fmt("vocab overlap %.1f%%;", overlap);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nt = result.runs[i];
    const auto& full = result.runs[n + i];
    const double level = nt.final_metrics.mean_reward;
    int nt_eps = episodes_to_reach(nt.log, level, cfg.curve_window);
    if (nt_eps == 0) nt_eps = static_cast<int>(nt.log.episodes.size());
    const int full_eps = episodes_to_reach(full.log, level, cfg.curve_window);
    const bool faster = full_eps > 0 && full_eps <= 0.5 * nt_eps;
    const bool shorter = full.final_metrics.mean_steps <= 0.75 * nt.final_metrics.mean_steps;
    wins += faster && shorter;
    detail += fmt(" seed %llu: target %.2f episodes %d vs %d, steps %.2f vs %.2f;",
                  static_cast<unsigned long long>(nt.seed), level, full_eps, nt_eps, full.final_metrics.mean_steps,
                  nt.final_metrics.mean_steps);
  }
  detail += fmt(" %d/%zu seeds", wins, n);
  return {overlap >= 60.0 && wins >= 2, detail};
}

Outcome sparse_dense(int jobs, const fs::path& scratch) {
  const auto cfg = harness::ExperimentConfig::load((benchmark_dir() / "reward_haunt.json").string());
  const auto result = harness::run_experiment(cfg, jobs, (scratch / "reward").string());
  const std::size_t n = cfg.seeds.size();
  int sparse_failed = 0, dense_converged = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sparse_failed += !result.runs[i].converged;
    dense_converged += result.runs[n + i].converged;
  }
  return {sparse_failed == static_cast<int>(n) && dense_converged == static_cast<int>(n),
          fmt("sparse unconverged %d/%zu, dense converged %d/%zu", sparse_failed, n, dense_converged, n)};
}

Outcome pretraining() {
  const auto cfg = harness::ExperimentConfig::load((benchmark_dir() / "transfer_house.json").string());
  const auto r = harness::pretrain_on_corpus(engine::Theme::kHouse, cfg.pretrain, 1,
                                             agent::default_dim(engine::Theme::kHouse), act::kDefaultPruneWidth,
                                             nullptr);
  return {r.after.accuracy >= 2.0 * r.after.random_baseline,
          fmt("%d held-out examples, accuracy %.3f (before %.3f), random baseline %.3f", r.after.examples,
              r.after.accuracy, r.before.accuracy, r.after.random_baseline)};
}

std::vector<std::pair<std::string, std::string>> tree(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), dir).string(), read_file(e.path().string()));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism(int jobs, const fs::path& scratch) {
  auto cfg = harness::ExperimentConfig::load((benchmark_dir() / "transfer_house.json").string());
  cfg.seeds = {1, 2};
  cfg.train.episode_cap = 30;
  cfg.source_train.episode_cap = 30;
  cfg.pretrain.games = 10;
  cfg.pretrain.epochs = 3;
  cfg.init_episodes = 5;
  cfg.eval_episodes = 5;
  const auto a = scratch / "determinism_a";
  const auto b = scratch / "determinism_b";
  harness::run_experiment(cfg, 1, a.string());
  harness::run_experiment(cfg, std::max(jobs, 2), b.string());
  const auto ta = tree(a);
  const auto tb = tree(b);
  int differing = 0;
  for (std::size_t i = 0; i < std::min(ta.size(), tb.size()); ++i) differing += ta[i] != tb[i];
  const bool same = ta.size() == tb.size() && differing == 0;
  return {same, fmt("%zu vs %zu files, %d differ (1 job vs %d jobs)", ta.size(), tb.size(), differing,
                    std::max(jobs, 2))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgtl acceptance criteria"};
  std::vector<int> only;
  int jobs = 1;
  bool strict = false;
  std::string scratch_arg, report_path;
  app.add_option("--only", only, "criteria to run")->delimiter(',')->check(CLI::Range(1, 10));
  app.add_option("--jobs", jobs, "worker threads for experiments")->check(CLI::PositiveNumber);
  app.add_option("--scratch", scratch_arg, "directory for experiment outputs");
  app.add_option("--report", report_path, "also write the result lines to this file");
  app.add_flag("--strict", strict, "exit non-zero when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  const fs::path scratch = scratch_arg.empty() ? fs::temp_directory_path() / "kgtl_acceptance" : fs::path(scratch_arg);
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::vector<std::function<Outcome()>> criteria = {
      gradients,
      chain,
      oracle_minimality,
      combinatorics,
      transfer_identity,
      bonus_bound,
      [&] { return directional_transfer(jobs, scratch); },
      [&] { return sparse_dense(jobs, scratch); },
      pretraining,
      [&] { return determinism(jobs, scratch); },
  };
  std::ofstream report;
  if (!report_path.empty()) report.open(report_path);
  auto emit = [&](const std::string& line) {
    std::cout << line << std::endl;
    if (report) report << line << std::endl;
  };
  int passed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit("criterion " + std::to_string(id) + ": " + (o.pass ? "PASS" : "FAIL") + " (" + fmt("%.1fs", secs) + ") " +
         o.detail);
    ++ran;
    passed += o.pass;
  }
  emit("summary: " + std::to_string(passed) + "/" + std::to_string(ran) + " passed");
  return strict && passed != ran ? 1 : 0;
}
