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

#include "kgtl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <json.hpp>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include "kgtl/common.hpp"

namespace kgtl::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view arm_name(Arm a) {
  switch (a) {
    case Arm::kNoTransfer: return "no-transfer";
    case Arm::kQa: return "qa";
    case Arm::kSeeded: return "seeded";
    case Arm::kFull: return "full";
    case Arm::kUntuned: return "untuned";
  }
  return "?";
}

Arm parse_arm(std::string_view s) {
  for (Arm a : {Arm::kNoTransfer, Arm::kQa, Arm::kSeeded, Arm::kFull, Arm::kUntuned})
    if (arm_name(a) == s) return a;
  fail(ErrorCode::kConfig, "unknown arm: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Config

namespace {

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::kConfig, "experiment config: " + what); }

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(std::string("field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) config_error("unknown field '" + it.key() + "' in " + where);
  }
}

void train_from_json(const json& j, agent::TrainConfig& c, const std::string& where) {
  reject_unknown(j,
                 {"gamma", "epsilon_start", "epsilon_end", "epsilon_decay_episodes", "lr", "grad_clip", "batch_size",
                  "replay_capacity", "rho", "episode_cap", "step_cap", "prune_k", "seed", "reward_mode", "dim",
                  "convergence_window", "convergence_patience", "convergence_tolerance", "stop_on_convergence"},
                 where);
  read_field(j, "gamma", c.gamma);
  read_field(j, "epsilon_start", c.epsilon_start);
  read_field(j, "epsilon_end", c.epsilon_end);
  read_field(j, "epsilon_decay_episodes", c.epsilon_decay_episodes);
  read_field(j, "lr", c.lr);
  read_field(j, "grad_clip", c.grad_clip);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "replay_capacity", c.replay_capacity);
  read_field(j, "rho", c.rho);
  read_field(j, "episode_cap", c.episode_cap);
  read_field(j, "step_cap", c.step_cap);
  read_field(j, "prune_k", c.prune_k);
  read_field(j, "seed", c.seed);
  if (j.contains("reward_mode")) {
    if (!j["reward_mode"].is_string()) config_error("field 'reward_mode' has the wrong type");
    c.reward_mode = agent::parse_reward_mode(j["reward_mode"].get<std::string>());
  }
  read_field(j, "dim", c.dim);
  read_field(j, "convergence_window", c.convergence_window);
  read_field(j, "convergence_patience", c.convergence_patience);
  read_field(j, "convergence_tolerance", c.convergence_tolerance);
  read_field(j, "stop_on_convergence", c.stop_on_convergence);
}

json train_to_json(const agent::TrainConfig& c) {
  return json{{"gamma", c.gamma},
              {"epsilon_start", c.epsilon_start},
              {"epsilon_end", c.epsilon_end},
              {"epsilon_decay_episodes", c.epsilon_decay_episodes},
              {"lr", c.lr},
              {"grad_clip", c.grad_clip},
              {"batch_size", c.batch_size},
              {"replay_capacity", c.replay_capacity},
              {"rho", c.rho},
              {"episode_cap", c.episode_cap},
              {"step_cap", c.step_cap},
              {"prune_k", c.prune_k},
              {"seed", c.seed},
              {"reward_mode", std::string(agent::reward_mode_name(c.reward_mode))},
              {"dim", c.dim},
              {"convergence_window", c.convergence_window},
              {"convergence_patience", c.convergence_patience},
              {"convergence_tolerance", c.convergence_tolerance},
              {"stop_on_convergence", c.stop_on_convergence}};
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, what + ": " + e.what());
  }
}

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

}  // namespace

agent::TrainConfig train_config_from_json(std::string_view text, agent::TrainConfig base) {
  train_from_json(parse_json(text, "training config"), base, "training config");
  base.validate();
  return base;
}

std::string train_config_to_json(const agent::TrainConfig& cfg) { return train_to_json(cfg).dump(2) + "\n"; }

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion)
    config_error("unsupported schema_version " + std::to_string(schema_version));
  if (name.empty() || name.find_first_of("/\\") != std::string::npos) config_error("name must be a plain file name");
  if (target_spec.empty()) config_error("target_spec is required");
  if (arms.empty()) config_error("at least one arm is required");
  if (seeds.empty()) config_error("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) config_error("seeds must be distinct");
  std::set<std::string> labels;
  for (const auto& a : arms) {
    if (!labels.insert(a.label).second) config_error("duplicate arm label '" + a.label + "'");
    const bool needs_guide = a.arm == Arm::kSeeded || a.arm == Arm::kFull || a.arm == Arm::kUntuned;
    if (needs_guide && guide.empty()) config_error("arm '" + a.label + "' needs a guide");
    if ((a.arm == Arm::kFull || a.arm == Arm::kUntuned) && source_spec.empty())
      config_error("arm '" + a.label + "' needs a source_spec");
    if ((a.arm == Arm::kFull || a.arm == Arm::kUntuned) && a.reward_mode != agent::RewardMode::kDense)
      config_error("arm '" + a.label + "' always uses dense rewards");
  }
  if (init_episodes < 1 || eval_episodes < 1) config_error("init_episodes and eval_episodes must be positive");
  if (!(bonus_scale > 0.0 && bonus_scale < 1.0)) config_error("bonus_scale must be in (0, 1)");
  if (curve_window < 1) config_error("curve_window must be positive");
  if (pretrain.games < 5 || pretrain.epochs < 0 || pretrain.lr <= 0.0) config_error("invalid pretrain settings");
  train.validate();
  source_train.validate();
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text, const std::string& base_dir) {
  const json j = parse_json(text, "experiment config");
  reject_unknown(j,
                 {"schema_version", "name", "source_spec", "target_spec", "guide", "arms", "seeds", "train",
                  "source_train", "pretrain", "init_episodes", "eval_episodes", "bonus_scale", "curve_window"},
                 "experiment config");
  ExperimentConfig c;
  if (!j.contains("schema_version")) config_error("schema_version is required");
  read_field(j, "schema_version", c.schema_version);
  read_field(j, "name", c.name);
  read_field(j, "source_spec", c.source_spec);
  read_field(j, "target_spec", c.target_spec);
  read_field(j, "guide", c.guide);
  c.source_spec = resolve(c.source_spec, base_dir);
  c.target_spec = resolve(c.target_spec, base_dir);
  c.guide = resolve(c.guide, base_dir);
  if (j.contains("seeds")) read_field(j, "seeds", c.seeds);
  if (j.contains("train")) train_from_json(j["train"], c.train, "train");
  c.source_train = c.train;
  if (j.contains("source_train")) train_from_json(j["source_train"], c.source_train, "source_train");
  if (j.contains("pretrain")) {
    const json& p = j["pretrain"];
    reject_unknown(p, {"games", "rooms", "quest_len", "corpus_seed", "epochs", "lr"}, "pretrain");
    read_field(p, "games", c.pretrain.games);
    read_field(p, "rooms", c.pretrain.rooms);
    read_field(p, "quest_len", c.pretrain.quest_len);
    read_field(p, "corpus_seed", c.pretrain.corpus_seed);
    read_field(p, "epochs", c.pretrain.epochs);
    read_field(p, "lr", c.pretrain.lr);
  }
  read_field(j, "init_episodes", c.init_episodes);
  read_field(j, "eval_episodes", c.eval_episodes);
  read_field(j, "bonus_scale", c.bonus_scale);
  read_field(j, "curve_window", c.curve_window);

  if (!j.contains("arms") || !j["arms"].is_array()) config_error("arms must be a list");
  std::map<Arm, int> count;
  for (const auto& a : j["arms"]) {
    ArmSpec s;
    if (a.is_string()) {
      s.arm = parse_arm(a.get<std::string>());
    } else {
      reject_unknown(a, {"arm", "reward_mode", "label"}, "arm entry");
      if (!a.contains("arm") || !a["arm"].is_string()) config_error("arm entry needs an 'arm' name");
      s.arm = parse_arm(a["arm"].get<std::string>());
      if (a.contains("reward_mode")) {
        if (!a["reward_mode"].is_string()) config_error("field 'reward_mode' has the wrong type");
        s.reward_mode = agent::parse_reward_mode(a["reward_mode"].get<std::string>());
      }
      read_field(a, "label", s.label);
    }
    ++count[s.arm];
    c.arms.push_back(std::move(s));
  }
  for (auto& s : c.arms) {
    if (!s.label.empty()) continue;
    s.label = std::string(arm_name(s.arm));
    if (count[s.arm] > 1) s.label += "-" + std::string(agent::reward_mode_name(s.reward_mode));
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  const std::string text = read_file(path);
  return from_json(text, fs::path(path).parent_path().string());
}

std::string ExperimentConfig::to_json() const {
  json arms_j = json::array();
  for (const auto& a : arms)
    arms_j.push_back({{"arm", std::string(arm_name(a.arm))},
                      {"reward_mode", std::string(agent::reward_mode_name(a.reward_mode))},
                      {"label", a.label}});
  json j{{"schema_version", schema_version},
         {"name", name},
         {"source_spec", source_spec},
         {"target_spec", target_spec},
         {"guide", guide},
         {"arms", arms_j},
         {"seeds", seeds},
         {"train", train_to_json(train)},
         {"source_train", train_to_json(source_train)},
         {"pretrain",
          {{"games", pretrain.games},
           {"rooms", pretrain.rooms},
           {"quest_len", pretrain.quest_len},
           {"corpus_seed", pretrain.corpus_seed},
           {"epochs", pretrain.epochs},
           {"lr", pretrain.lr}}},
         {"init_episodes", init_episodes},
         {"eval_episodes", eval_episodes},
         {"bonus_scale", bonus_scale},
         {"curve_window", curve_window}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Statistics

Stat mean_std(const std::vector<double>& xs) {
  Stat s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= s.n;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / s.n);
  return s;
}

WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  KGTL_REQUIRE(a.size() >= 2 && b.size() >= 2, "Welch's test needs at least two values per sample");
  auto moments = [](const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::pair{m, ss / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sa = va / na, sb = vb / nb;
  WelchResult r;
  if (sa + sb == 0.0) {
    // Both samples constant: no evidence either way unless the means differ.
    r.t = ma == mb ? 0.0 : std::copysign(INFINITY, ma - mb);
    r.df = na + nb - 2.0;
    r.p = ma == mb ? 1.0 : 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

// ---------------------------------------------------------------------------
// Tables

std::string RunResult::meta_json() const {
  json j{{"label", label},
         {"arm", std::string(arm_name(arm))},
         {"reward_mode", std::string(agent::reward_mode_name(reward_mode))},
         {"seed", seed},
         {"episodes", log.episodes.size()},
         {"converged", converged},
         {"converged_episode", log.converged_episode},
         {"stop_condition", log.stop_condition},
         {"init_reward", init_reward},
         {"final_mean_reward", final_metrics.mean_reward},
         {"final_std_reward", final_metrics.std_reward},
         {"final_mean_steps", final_metrics.mean_steps},
         {"final_std_steps", final_metrics.std_steps},
         {"final_completion_rate", final_metrics.completion_rate}};
  if (source_log)
    j["source"] = {{"episodes", source_log->episodes.size()},
                   {"converged", source_log->converged},
                   {"converged_episode", source_log->converged_episode},
                   {"stop_condition", source_log->stop_condition}};
  return j.dump(2) + "\n";
}

ResultsTable tabulate(const std::vector<RunResult>& runs, const std::string& game) {
  ResultsTable table;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunResult*>> by_label;
  for (const auto& r : runs) {
    if (!by_label.count(r.label)) order.push_back(r.label);
    by_label[r.label].push_back(&r);
  }
  std::map<std::string, std::vector<double>> finals;
  for (const auto& label : order) {
    const auto& rs = by_label[label];
    ResultRow row;
    row.label = label;
    row.game = game;
    std::vector<double> init, fin, steps;
    for (const RunResult* r : rs) {
      init.push_back(r->init_reward);
      fin.push_back(r->final_metrics.mean_reward);
      steps.push_back(r->final_metrics.mean_steps);
      row.converged += r->converged ? 1 : 0;
    }
    row.runs = static_cast<int>(rs.size());
    row.init_reward = mean_std(init);
    row.final_reward = mean_std(fin);
    row.steps = mean_std(steps);
    finals[label] = fin;
    table.rows.push_back(row);
  }
  // Baseline: the no-transfer row with the same reward mode, else any.
  for (auto& row : table.rows) {
    const RunResult* first = by_label[row.label].front();
    std::string base;
    for (const auto& label : order) {
      const RunResult* b = by_label[label].front();
      if (b->arm != Arm::kNoTransfer) continue;
      if (base.empty() || b->reward_mode == first->reward_mode) base = label;
      if (b->reward_mode == first->reward_mode) break;
    }
    if (base.empty() || base == row.label) continue;
    if (finals[row.label].size() < 2 || finals[base].size() < 2) continue;
    row.p_vs_baseline = welch_t(finals[row.label], finals[base]).p;
  }
  return table;
}

namespace {

std::string cell(const Stat& s, bool dashed, const char* sep) {
  if (dashed) return "-";
  return format_fixed(s.mean, 3) + sep + format_fixed(s.std, 3);
}

}  // namespace

std::string ResultsTable::to_csv() const {
  std::string out =
      "arm,game,runs,converged,init_mean,init_std,final_mean,final_std,steps_mean,steps_std,p_vs_no_transfer\n";
  for (const auto& r : rows) {
    const bool dash = r.converged == 0;
    out += r.label + "," + r.game + "," + std::to_string(r.runs) + "," + std::to_string(r.converged) + ",";
    out += format_fixed(r.init_reward.mean, 6) + "," + format_fixed(r.init_reward.std, 6) + ",";
    out += dash ? "-,-," : format_fixed(r.final_reward.mean, 6) + "," + format_fixed(r.final_reward.std, 6) + ",";
    out += dash ? "-,-," : format_fixed(r.steps.mean, 6) + "," + format_fixed(r.steps.std, 6) + ",";
    out += r.p_vs_baseline ? format_fixed(*r.p_vs_baseline, 6) : std::string("-");
    out += "\n";
  }
  return out;
}

std::string ResultsTable::to_markdown() const {
  std::string out = "| Arm | Game | Init. Rwd. | Final Rwd. | Steps | Converged | p vs no-transfer |\n";
  out += "|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    const bool dash = r.converged == 0;
    out += "| " + r.label + " | " + r.game + " | " + cell(r.init_reward, false, " ± ") + " | " +
           cell(r.final_reward, dash, " ± ") + " | " + cell(r.steps, dash, " ± ") + " | " +
           std::to_string(r.converged) + "/" + std::to_string(r.runs) + " | " +
           (r.p_vs_baseline ? format_fixed(*r.p_vs_baseline, 4) : std::string("-")) + " |\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipelines

transfer::PretrainResult pretrain_on_corpus(engine::Theme theme, const PretrainConfig& cfg, std::uint64_t seed,
                                            int dim, int prune_k, const kg::KnowledgeGraph* seed_graph) {
  transfer::CorpusOptions co;
  co.n_rooms = cfg.rooms;
  co.quest_len = cfg.quest_len;
  const auto corpus = transfer::build_trace_corpus(theme, cfg.games, cfg.corpus_seed, co);
  std::set<std::string> vocab;
  for (const auto& spec : corpus.specs)
    for (auto& w : agent::network_vocabulary(spec, seed_graph)) vocab.insert(std::move(w));
  Rng init_rng(derive_seed(seed, "pretrain/init"));
  const auto params = qnet::init_params({vocab.begin(), vocab.end()}, dim, init_rng);
  transfer::PretrainOptions po;
  po.epochs = cfg.epochs;
  po.lr = cfg.lr;
  po.prune_k = prune_k;
  po.seed = derive_seed(seed, "pretrain");
  po.seed_graph = seed_graph;
  return transfer::pretrain(corpus, params, po);
}

namespace {

// Inputs shared by every run of an experiment, loaded once.
struct Shared {
  const ExperimentConfig& cfg;
  engine::GameSpec target;
  std::optional<engine::GameSpec> source;
  std::optional<kg::KnowledgeGraph> guide;
  transfer::CheckpointSet target_checkpoints;
  std::optional<transfer::CheckpointSet> source_checkpoints;

  std::mutex mu;
  std::map<std::pair<std::uint64_t, bool>, std::shared_future<qnet::Parameters>> pretrained;
  std::map<std::uint64_t, std::shared_future<std::pair<qnet::Parameters, agent::EpisodeLog>>> sourced;

  explicit Shared(const ExperimentConfig& c) : cfg(c) {
    target = engine::spec_from_json(read_file(c.target_spec));
    target_checkpoints = transfer::make_checkpoints(target, c.bonus_scale);
    if (!c.source_spec.empty()) {
      source = engine::spec_from_json(read_file(c.source_spec));
      source_checkpoints = transfer::make_checkpoints(*source, c.bonus_scale);
    }
    if (!c.guide.empty()) guide = kg::seed_graph_from_guide_file(c.guide);
  }

  // Runs `make` once per key; concurrent callers wait for the first.
  template <typename Map, typename Key, typename Make>
  auto once(Map& map, const Key& key, Make make) {
    using Value = typename Map::mapped_type;
    std::promise<typename std::decay_t<decltype(std::declval<Value>().get())>> promise;
    Value fut;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = map.find(key);
      if (it == map.end()) {
        fut = promise.get_future().share();
        map.emplace(key, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(make());
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

  qnet::Parameters pretrain(std::uint64_t seed, bool seeded) {
    return once(pretrained, std::pair{seed, seeded}, [&] {
      const int dim = cfg.train.dim > 0 ? cfg.train.dim : agent::default_dim(target.theme);
      return pretrain_on_corpus(target.theme, cfg.pretrain, seed, dim, cfg.train.prune_k,
                                seeded ? &*guide : nullptr)
          .params;
    });
  }

  std::pair<qnet::Parameters, agent::EpisodeLog> train_source(std::uint64_t seed) {
    return once(sourced, seed, [&] {
      const auto pre = pretrain(seed, true);
      Rng rng(derive_seed(seed, "transfer/source"));
      const auto init = transfer::transfer_parameters(pre, agent::network_vocabulary(*source, &*guide), rng);
      agent::TrainConfig tc = cfg.source_train;
      tc.seed = derive_seed(seed, "source");
      tc.reward_mode = agent::RewardMode::kDense;
      agent::TrainInputs in;
      in.init = &init;
      in.seed_graph = &*guide;
      in.checkpoints = &*source_checkpoints;
      auto r = agent::train(*source, tc, in);
      return std::pair{std::move(r.params), std::move(r.log)};
    });
  }
};

agent::EpisodeLog metrics_log(const agent::Metrics& m, double epsilon) {
  agent::EpisodeLog log;
  for (std::size_t i = 0; i < m.rewards.size(); ++i) {
    agent::EpisodeRecord e;
    e.episode = static_cast<int>(i) + 1;
    e.total_reward = m.rewards[i];
    e.steps = m.steps[i];
    e.epsilon = epsilon;
    log.episodes.push_back(e);
  }
  log.stop_condition = "evaluation";
  return log;
}

RunResult run_one(Shared& sh, const ArmSpec& arm, std::uint64_t seed) {
  const ExperimentConfig& cfg = sh.cfg;
  RunResult out;
  out.label = arm.label;
  out.arm = arm.arm;
  out.reward_mode = arm.reward_mode;
  out.seed = seed;
  const bool seeded = arm.arm == Arm::kSeeded || arm.arm == Arm::kFull || arm.arm == Arm::kUntuned;
  const kg::KnowledgeGraph* graph = seeded ? &*sh.guide : nullptr;

  std::optional<qnet::Parameters> init;
  if (arm.arm == Arm::kQa) {
    Rng rng(derive_seed(seed, "transfer/target"));
    init = transfer::transfer_parameters(sh.pretrain(seed, false), agent::network_vocabulary(sh.target, nullptr), rng);
  } else if (arm.arm == Arm::kFull || arm.arm == Arm::kUntuned) {
    auto [params, log] = sh.train_source(seed);
    out.source_log = std::move(log);
    Rng rng(derive_seed(seed, "transfer/target"));
    init = transfer::transfer_parameters(params, agent::network_vocabulary(sh.target, graph), rng);
  }

  agent::EvalOptions eo;
  eo.episodes = cfg.eval_episodes;
  eo.seed = derive_seed(seed, "eval");
  eo.step_cap = cfg.train.step_cap;
  eo.prune_k = cfg.train.prune_k;
  eo.reward_mode = arm.reward_mode;
  eo.seed_graph = graph;
  eo.checkpoints = &sh.target_checkpoints;

  if (arm.arm == Arm::kUntuned) {
    out.final_metrics = agent::evaluate(sh.target, *init, eo);
    out.log = metrics_log(out.final_metrics, eo.epsilon);
    out.converged = out.source_log->converged;
    out.log.converged = out.converged;
  } else {
    agent::TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.reward_mode = arm.reward_mode;
    agent::TrainInputs in;
    in.init = init ? &*init : nullptr;
    in.seed_graph = graph;
    in.checkpoints = &sh.target_checkpoints;
    auto r = agent::train(sh.target, tc, in);
    out.log = std::move(r.log);
    out.converged = out.log.converged;
    out.final_metrics = agent::evaluate(sh.target, r.params, eo);
  }
  const std::size_t n = std::min<std::size_t>(out.log.episodes.size(), static_cast<std::size_t>(cfg.init_episodes));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += out.log.episodes[i].total_reward;
  out.init_reward = n ? sum / static_cast<double>(n) : 0.0;
  return out;
}

std::string run_stem(const RunResult& r) { return r.label + "_seed" + std::to_string(r.seed); }

}  // namespace

RunResult run_arm(const ExperimentConfig& cfg, const ArmSpec& arm, std::uint64_t seed) {
  cfg.validate();
  Shared sh(cfg);
  return run_one(sh, arm, seed);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs, const std::string& out_dir) {
  cfg.validate();
  KGTL_REQUIRE(jobs >= 1, "jobs must be at least 1");
  Shared sh(cfg);
  struct Task {
    const ArmSpec* arm;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& a : cfg.arms)
    for (auto s : cfg.seeds) tasks.push_back({&a, s});
  std::vector<std::optional<RunResult>> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = run_one(sh, *tasks[i].arm, tasks[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(jobs, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult out;
  for (auto& r : results) out.runs.push_back(std::move(*r));
  out.table = tabulate(out.runs, fs::path(cfg.target_spec).stem().string());
  if (out_dir.empty()) return out;

  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "runs", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create directory " + (root / "runs").string() + ": " + ec.message());
  write_file((root / "config.json").string(), cfg.to_json());
  std::map<std::string, std::vector<agent::EpisodeLog>> curves;
  for (const auto& r : out.runs) {
    const fs::path stem = root / "runs" / run_stem(r);
    write_file(stem.string() + ".csv", r.log.to_csv());
    write_file(stem.string() + ".meta.json", r.meta_json());
    write_file(stem.string() + ".eval.csv", metrics_log(r.final_metrics, 0.1).to_csv());
    if (r.source_log) write_file(stem.string() + ".source.csv", r.source_log->to_csv());
    curves[r.label].push_back(r.log);
  }
  write_file((root / "results.csv").string(), out.table.to_csv());
  write_file((root / "results.md").string(), out.table.to_markdown());
  emit_curves(curves, cfg.curve_window, (root / "curves").string());
  return out;
}

// ---------------------------------------------------------------------------
// Curves

std::vector<CurvePoint> curve(const std::vector<agent::EpisodeLog>& logs, int window) {
  KGTL_REQUIRE(!logs.empty(), "curves need at least one log");
  KGTL_REQUIRE(window >= 1, "smoothing window must be positive");
  std::vector<std::vector<double>> smoothed;
  std::size_t longest = 0;
  for (const auto& log : logs) {
    const auto raw = log.rewards();
    std::vector<double> s(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const std::size_t n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
      double sum = 0.0;
      for (std::size_t k = i + 1 - n; k <= i; ++k) sum += raw[k];
      s[i] = sum / static_cast<double>(n);
    }
    longest = std::max(longest, s.size());
    smoothed.push_back(std::move(s));
  }
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < longest; ++i) {
    std::vector<double> xs;
    for (const auto& s : smoothed)
      if (i < s.size()) xs.push_back(s[i]);
    const Stat st = mean_std(xs);
    out.push_back({static_cast<int>(i) + 1, st.mean, st.std, st.n});
  }
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& points, int window) {
  std::string out = "# window=" + std::to_string(window) + "\nepisode,mean_reward,std_reward,runs\n";
  for (const auto& p : points)
    out += std::to_string(p.episode) + "," + format_fixed(p.mean, 6) + "," + format_fixed(p.std, 6) + "," +
           std::to_string(p.runs) + "\n";
  return out;
}

void emit_curves(const std::map<std::string, std::vector<agent::EpisodeLog>>& logs, int window,
                 const std::string& out_dir) {
  KGTL_REQUIRE(!logs.empty(), "curves need at least one log");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create directory " + out_dir + ": " + ec.message());
  for (const auto& [label, ls] : logs)
    write_file((fs::path(out_dir) / (label + ".csv")).string(), curve_csv(curve(ls, window), window));
}

std::map<std::string, std::vector<agent::EpisodeLog>> load_run_logs(const std::string& runs_dir) {
  if (!fs::is_directory(runs_dir)) fail(ErrorCode::kIo, "not a directory: " + runs_dir);
  static const std::regex name(R"((.+)_seed(\d+)\.csv)");
  std::map<std::string, std::map<std::uint64_t, agent::EpisodeLog>> found;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    std::smatch m;
    const std::string file = entry.path().filename().string();
    if (!entry.is_regular_file() || !std::regex_match(file, m, name)) continue;
    found[m[1]][std::stoull(m[2])] = agent::EpisodeLog::from_csv(read_file(entry.path().string()));
  }
  std::map<std::string, std::vector<agent::EpisodeLog>> out;
  for (auto& [label, by_seed] : found)
    for (auto& [seed, log] : by_seed) out[label].push_back(std::move(log));
  return out;
}

// ---------------------------------------------------------------------------
// Game statistics

std::string GameStats::to_json() const {
  json j{{"vocab_size", vocab_size},
         {"branching_factor", branching_factor},
         {"rooms", rooms},
         {"completion_steps", completion_steps},
         {"words_per_observation", words_per_observation},
         {"new_triples_per_observation", new_triples_per_observation},
         {"vocab_overlap_percent", vocab_overlap},
         {"max_augmented_reward", max_augmented_reward}};
  return j.dump(2) + "\n";
}

double new_triples_per_observation(const std::vector<engine::Observation>& observations) {
  if (observations.empty()) return 0.0;
  kg::KnowledgeGraph graph;
  long added = 0;
  for (const auto& obs : observations) {
    auto next = kg::update_graph(graph, kg::extract_triples(obs, graph.player_location().value_or("")));
    for (const auto& t : next.triples())
      if (!graph.contains(t.subject, t.relation, t.object)) ++added;
    graph = std::move(next);
  }
  return static_cast<double>(added) / static_cast<double>(observations.size());
}

GameStats game_stats(const engine::GameSpec& spec, const std::vector<engine::GameSpec>& domain, double bonus_scale) {
  KGTL_REQUIRE(!domain.empty(), "game statistics need a non-empty domain");
  const engine::Game game(spec);
  const auto trace = game.oracle_walkthrough();
  GameStats s;
  s.vocab_size = static_cast<int>(spec.vocabulary.size());
  s.branching_factor = game.branching_factor();
  s.rooms = static_cast<int>(spec.rooms.size());
  s.completion_steps = static_cast<int>(trace.steps.size());
  std::vector<engine::Observation> observations;
  for (const auto& st : trace.steps) observations.push_back(st.observation);
  observations.push_back(trace.final_observation);
  double words = 0.0;
  for (const auto& o : observations) words += static_cast<double>(tokenize(o.text).size());
  s.words_per_observation = words / static_cast<double>(observations.size());
  s.new_triples_per_observation = new_triples_per_observation(observations);
  std::set<std::string> vocab;
  for (const auto& d : domain) vocab.insert(d.vocabulary.begin(), d.vocabulary.end());
  s.vocab_overlap = transfer::vocab_overlap(spec.vocabulary, {vocab.begin(), vocab.end()});
  s.max_augmented_reward = transfer::max_augmented_reward(spec, bonus_scale);
  return s;
}

}  // namespace kgtl::harness
