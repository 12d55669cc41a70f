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

#include "kgtl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "kgtl/common.hpp"

namespace kgtl::agent {

std::string_view reward_mode_name(RewardMode m) { return m == RewardMode::kSparse ? "sparse" : "dense"; }

RewardMode parse_reward_mode(std::string_view s) {
  if (s == "sparse") return RewardMode::kSparse;
  if (s == "dense") return RewardMode::kDense;
  fail(ErrorCode::kConfig, "unknown reward mode: " + std::string(s));
}

void TrainConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::kConfig, std::string("invalid training config: ") + what);
  };
  check(gamma >= 0.0 && gamma < 1.0, "gamma must be in [0, 1)");
  check(epsilon_start >= 0.0 && epsilon_start <= 1.0, "epsilon_start must be in [0, 1]");
  check(epsilon_end >= 0.0 && epsilon_end <= 1.0, "epsilon_end must be in [0, 1]");
  check(epsilon_decay_episodes >= 0, "epsilon_decay_episodes must be non-negative");
  check(lr > 0.0, "lr must be positive");
  check(grad_clip >= 0.0, "grad_clip must be non-negative");
  check(batch_size >= 1, "batch_size must be at least 1");
  check(replay_capacity >= batch_size, "replay_capacity must be at least batch_size");
  check(rho >= 0.0 && rho <= 1.0, "rho must be in [0, 1]");
  check(episode_cap >= 1, "episode_cap must be at least 1");
  check(step_cap >= 1, "step_cap must be at least 1");
  check(prune_k >= 1, "prune_k must be at least 1");
  check(dim >= 0, "dim must be non-negative");
  check(convergence_window >= 1, "convergence_window must be at least 1");
  check(convergence_patience >= 1, "convergence_patience must be at least 1");
  check(convergence_tolerance > 0.0, "convergence_tolerance must be positive");
  check(checkpoint_every >= 0, "checkpoint_every must be non-negative");
}

double TrainConfig::epsilon(int episode) const {
  if (epsilon_decay_episodes == 0) return epsilon_end;
  const double f = std::min(1.0, static_cast<double>(episode) / epsilon_decay_episodes);
  return epsilon_start + (epsilon_end - epsilon_start) * f;
}

int default_dim(engine::Theme theme) { return theme == engine::Theme::kHaunt ? 100 : 50; }

// ---------------------------------------------------------------------------
// Replay

ReplayBuffer::ReplayBuffer(int capacity, double rho) : capacity_(capacity), rho_(rho) {
  KGTL_REQUIRE(capacity >= 1, "replay capacity must be positive");
  KGTL_REQUIRE(rho >= 0.0 && rho <= 1.0, "rho must be in [0, 1]");
}

void ReplayBuffer::add(Transition t) {
  auto& bucket = t.reward > 0.0 ? positive_ : other_;
  bucket.push_back(std::move(t));
  if (static_cast<int>(bucket.size()) > capacity_) bucket.pop_front();
}

std::vector<const Transition*> ReplayBuffer::sample(int n, Rng& rng) const {
  std::vector<const Transition*> out;
  if (size() == 0 || n <= 0) return out;
  int n_pos = 0;
  if (!positive_.empty()) n_pos = other_.empty() ? n : static_cast<int>(std::ceil(rho_ * n - 1e-12));
  for (int i = 0; i < n_pos; ++i) out.push_back(&positive_[rng.index(positive_.size())]);
  for (int i = n_pos; i < n; ++i) out.push_back(&other_[rng.index(other_.size())]);
  return out;
}

// ---------------------------------------------------------------------------
// Acting and targets

std::vector<double> q_values(const qnet::Parameters& params, const kg::KnowledgeGraph& graph,
                             std::string_view observation, const std::vector<std::string>& actions) {
  const auto u = qnet::project_state(qnet::encode_state(graph, observation, params), params);
  std::vector<double> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(qnet::dot(u, qnet::encode_action(a, params)));
  return out;
}

namespace {

std::size_t argmax_first(const std::vector<double>& q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

}  // namespace

std::string select_action(const qnet::Parameters& params, const kg::KnowledgeGraph& graph,
                          std::string_view observation, const std::vector<std::string>& pruned,
                          const std::vector<std::string>& full, double epsilon, Rng& rng) {
  KGTL_REQUIRE(!full.empty(), "the full action set is empty");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return full[rng.index(full.size())];
  if (pruned.empty()) return full.front();
  // Lexicographic tie-break: scan in sorted order, keep the first maximum.
  std::vector<std::string> sorted = pruned;
  std::sort(sorted.begin(), sorted.end());
  const auto q = q_values(params, graph, observation, sorted);
  return sorted[argmax_first(q)];
}

double td_target(const Transition& t, const qnet::Parameters& params, double gamma) {
  if (t.done || t.next_actions.empty() || gamma == 0.0) return t.reward;
  const auto q = q_values(params, *t.next_graph, t.next_observation, t.next_actions);
  return t.reward + gamma * *std::max_element(q.begin(), q.end());
}

qnet::Var td_loss(qnet::Tape& tape, const std::vector<const Transition*>& batch, double gamma) {
  KGTL_REQUIRE(!batch.empty(), "TD loss needs a non-empty batch");
  const qnet::Parameters& p = tape.params();
  // Targets use the same parameters but are constants, computed on a
  // separate non-recording tape that shares work across the batch.
  qnet::Tape frozen(p, false);
  std::map<std::string, qnet::Vec, std::less<>> action_cache;
  auto encoded = [&](const std::string& a) -> const qnet::Vec& {
    auto it = action_cache.find(a);
    if (it == action_cache.end()) it = action_cache.emplace(a, frozen.value(qnet::encode_action(frozen, a))).first;
    return it->second;
  };
  std::vector<qnet::Var> errors;
  errors.reserve(batch.size());
  for (const Transition* t : batch) {
    double target = t->reward;
    if (!t->done && !t->next_actions.empty() && gamma != 0.0) {
      const auto u = qnet::project_state(frozen.value(qnet::encode_state(frozen, *t->next_graph, t->next_observation)), p);
      double best = -INFINITY;
      for (const auto& a : t->next_actions) best = std::max(best, qnet::dot(u, encoded(a)));
      target += gamma * best;
    }
    qnet::Var q = qnet::q_value(tape, qnet::encode_state(tape, *t->graph, t->observation),
                                qnet::encode_action(tape, t->action));
    errors.push_back(tape.squared_error(q, target));
  }
  return tape.mean_scalars(errors);
}

// ---------------------------------------------------------------------------
// Convergence

ConvergenceMonitor::ConvergenceMonitor(int window, int patience, double tolerance)
    : window_(window), patience_(patience), tolerance_(tolerance) {}

bool ConvergenceMonitor::push(double r) {
  ++count_;
  recent_.push_back(r);
  sum_ += r;
  if (static_cast<int>(recent_.size()) > window_) {
    sum_ -= recent_.front();
    recent_.pop_front();
  }
  if (static_cast<int>(recent_.size()) < window_) return converged();
  // Recompute the sum exactly to keep long runs free of drift.
  double s = 0.0;
  for (double x : recent_) s += x;
  sum_ = s;
  const double ma = s / window_;
  if (have_ma_) {
    // Strict inequality: a flat zero average never counts as converged.
    if (std::abs(ma - ma_) < tolerance_ * std::abs(ma_)) ++streak_;
    else streak_ = 0;
  }
  ma_ = ma;
  have_ma_ = true;
  if (!converged() && streak_ >= patience_) fired_at_ = count_;
  return converged();
}

// ---------------------------------------------------------------------------
// Episode log

std::string EpisodeLog::to_csv() const {
  std::string out = "episode,total_reward,steps,epsilon,loss_mean\n";
  for (const auto& e : episodes) {
    out += std::to_string(e.episode) + "," + format_fixed(e.total_reward, 6) + "," + std::to_string(e.steps) + "," +
           format_fixed(e.epsilon, 6) + "," + format_fixed(e.loss_mean, 6) + "\n";
  }
  return out;
}

EpisodeLog EpisodeLog::from_csv(std::string_view text) {
  EpisodeLog log;
  auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != "episode,total_reward,steps,epsilon,loss_mean")
    fail(ErrorCode::kFormat, "episode log: unexpected header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto cols = split(trim(lines[i]), ',');
    if (cols.size() != 5) fail(ErrorCode::kFormat, "episode log line " + std::to_string(i + 1) + ": expected 5 fields");
    try {
      EpisodeRecord r;
      r.episode = std::stoi(cols[0]);
      r.total_reward = std::stod(cols[1]);
      r.steps = std::stoi(cols[2]);
      r.epsilon = std::stod(cols[3]);
      r.loss_mean = std::stod(cols[4]);
      log.episodes.push_back(r);
    } catch (const std::exception&) {
      fail(ErrorCode::kFormat, "episode log line " + std::to_string(i + 1) + ": bad number");
    }
  }
  return log;
}

std::string EpisodeLog::meta_json() const {
  nlohmann::json j{{"episodes", episodes.size()},
                   {"converged", converged},
                   {"converged_episode", converged_episode},
                   {"stop_condition", stop_condition}};
  return j.dump(2) + "\n";
}

std::vector<double> EpisodeLog::rewards() const {
  std::vector<double> out;
  for (const auto& e : episodes) out.push_back(e.total_reward);
  return out;
}

// ---------------------------------------------------------------------------
// Episodes

std::vector<std::string> network_vocabulary(const engine::GameSpec& spec, const kg::KnowledgeGraph* seed_graph) {
  std::set<std::string> words(spec.vocabulary.begin(), spec.vocabulary.end());
  if (seed_graph)
    for (const auto& n : seed_graph->nodes())
      for (auto& t : tokenize(n)) words.insert(std::move(t));
  words.insert(std::string(kg::kPlayer));
  for (auto& t : tokenize(kg::kUnknownNode)) words.insert(std::move(t));
  return {words.begin(), words.end()};
}

namespace {

struct EpisodeContext {
  const engine::Game& game;
  act::ActionSet full;
  std::vector<std::string> explore;
  int prune_k;
  int step_cap;
  RewardMode mode;
  const kg::KnowledgeGraph* seed_graph;
  transfer::CheckpointTracker tracker;
};

struct EpisodeStats {
  double total = 0.0;
  int steps = 0;
  bool done = false;
  double loss_sum = 0.0;
  int loss_count = 0;
};

// Runs one episode. `on_transition` receives every transition and may update
// the parameters between steps.
template <typename OnTransition>
EpisodeStats run_episode(EpisodeContext& ctx, const qnet::Parameters& params, double epsilon, Rng& rng,
                         OnTransition&& on_transition) {
  EpisodeStats st;
  auto [state, obs] = ctx.game.reset();
  ctx.tracker.reset();
  auto graph = std::make_shared<const kg::KnowledgeGraph>(
      kg::update_graph(ctx.seed_graph ? *ctx.seed_graph : kg::KnowledgeGraph{}, kg::extract_triples(obs, "")));
  auto cands = act::candidate_actions(*graph, ctx.full, ctx.prune_k);
  for (int t = 0; t < ctx.step_cap; ++t) {
    const std::string a = select_action(params, *graph, obs.text, cands, ctx.explore, epsilon, rng);
    engine::StepResult res = ctx.game.step(state, a);
    double r;
    if (ctx.mode == RewardMode::kSparse) {
      r = res.done ? ctx.game.spec().completion_reward : 0.0;
    } else {
      r = res.reward + ctx.tracker.augment_reward(state.room, state.quest_index, a);
    }
    auto next_graph = std::make_shared<const kg::KnowledgeGraph>(
        kg::update_graph(*graph, kg::extract_triples(res.observation, graph->player_location().value_or(""))));
    std::vector<std::string> next_cands;
    if (!res.done) next_cands = act::candidate_actions(*next_graph, ctx.full, ctx.prune_k);
    Transition tr{graph, obs.text, a, r, next_graph, res.observation.text, next_cands, res.done};
    on_transition(std::move(tr), st);
    st.total += r;
    st.steps = t + 1;
    state = std::move(res.state);
    obs = std::move(res.observation);
    graph = std::move(next_graph);
    cands = std::move(next_cands);
    if (res.done) {
      st.done = true;
      break;
    }
  }
  return st;
}

}  // namespace

TrainResult train(const engine::GameSpec& spec, const TrainConfig& cfg, const TrainInputs& inputs) {
  cfg.validate();
  const engine::Game game(spec);
  TrainResult out;
  if (inputs.init) {
    out.params = *inputs.init;
  } else {
    Rng init_rng(derive_seed(cfg.seed, "init"));
    out.params = qnet::init_params(network_vocabulary(spec, inputs.seed_graph),
                                   cfg.dim > 0 ? cfg.dim : default_dim(spec.theme), init_rng);
  }
  EpisodeContext ctx{game,
                     act::full_action_set(spec),
                     {},
                     cfg.prune_k,
                     cfg.step_cap,
                     cfg.reward_mode,
                     inputs.seed_graph,
                     transfer::CheckpointTracker(cfg.reward_mode == RewardMode::kDense ? inputs.checkpoints : nullptr)};
  ctx.explore = act::exploration_actions(ctx.full);
  Rng act_rng(derive_seed(cfg.seed, "agent/act"));
  Rng replay_rng(derive_seed(cfg.seed, "agent/replay"));
  ReplayBuffer replay(cfg.replay_capacity, cfg.rho);
  ConvergenceMonitor monitor(cfg.convergence_window, cfg.convergence_patience, cfg.convergence_tolerance);
  out.log.stop_condition = "episode_cap";

  for (int ep = 0; ep < cfg.episode_cap; ++ep) {
    const double eps = cfg.epsilon(ep);
    EpisodeStats st = run_episode(ctx, out.params, eps, act_rng, [&](Transition tr, EpisodeStats& s) {
      replay.add(std::move(tr));
      if (static_cast<int>(replay.size()) < cfg.batch_size) return;
      const auto batch = replay.sample(cfg.batch_size, replay_rng);
      qnet::Tape tape(out.params, true);
      qnet::Var loss = td_loss(tape, batch, cfg.gamma);
      s.loss_sum += tape.scalar_value(loss);
      ++s.loss_count;
      qnet::Gradients g = tape.backward(loss);
      qnet::sgd_step(out.params, g, cfg.lr, cfg.grad_clip);
    });
    EpisodeRecord rec;
    rec.episode = ep + 1;
    rec.total_reward = st.total;
    rec.steps = st.steps;
    rec.epsilon = eps;
    rec.loss_mean = st.loss_count ? st.loss_sum / st.loss_count : 0.0;
    rec.done = st.done;
    out.log.episodes.push_back(rec);
    if (!out.params.all_finite()) fail(ErrorCode::kInternal, "parameters diverged to non-finite values");
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() && (ep + 1) % cfg.checkpoint_every == 0) {
      qnet::save_params_file(out.params, (std::filesystem::path(cfg.checkpoint_dir) /
                                          ("params_ep" + std::to_string(ep + 1) + ".kgqn")).string());
    }
    if (monitor.push(st.total) && !out.log.converged) {
      out.log.converged = true;
      out.log.converged_episode = monitor.fired_at();
      out.log.stop_condition = "converged";
      if (cfg.stop_on_convergence) break;
    }
  }
  return out;
}

Metrics summarize(const std::vector<double>& rewards, const std::vector<int>& steps, int completed) {
  Metrics m;
  m.rewards = rewards;
  m.steps = steps;
  const double n = static_cast<double>(rewards.size());
  if (rewards.empty()) return m;
  for (double r : rewards) m.mean_reward += r;
  for (int s : steps) m.mean_steps += s;
  m.mean_reward /= n;
  m.mean_steps /= n;
  for (double r : rewards) m.std_reward += (r - m.mean_reward) * (r - m.mean_reward);
  for (int s : steps) m.std_steps += (s - m.mean_steps) * (s - m.mean_steps);
  m.std_reward = std::sqrt(m.std_reward / n);
  m.std_steps = std::sqrt(m.std_steps / n);
  m.completion_rate = completed / n;
  return m;
}

Metrics evaluate(const engine::GameSpec& spec, const qnet::Parameters& params, const EvalOptions& options) {
  KGTL_REQUIRE(options.episodes >= 1, "evaluation needs at least one episode");
  const engine::Game game(spec);
  EpisodeContext ctx{game,
                     act::full_action_set(spec),
                     {},
                     options.prune_k,
                     options.step_cap,
                     options.reward_mode,
                     options.seed_graph,
                     transfer::CheckpointTracker(options.reward_mode == RewardMode::kDense ? options.checkpoints
                                                                                          : nullptr)};
  ctx.explore = act::exploration_actions(ctx.full);
  Rng rng(derive_seed(options.seed, "agent/eval"));
  std::vector<double> rewards;
  std::vector<int> steps;
  int completed = 0;
  for (int ep = 0; ep < options.episodes; ++ep) {
    EpisodeStats st = run_episode(ctx, params, options.epsilon, rng, [](Transition, EpisodeStats&) {});
    rewards.push_back(st.total);
    steps.push_back(st.steps);
    completed += st.done ? 1 : 0;
  }
  return summarize(rewards, steps, completed);
}

}  // namespace kgtl::agent
