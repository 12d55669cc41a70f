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

#include "kgtl/kgtl.h"

#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <new>
#include <string>

#include "kgtl/agent.hpp"
#include "kgtl/harness.hpp"

struct kgtl_spec {
  kgtl::engine::GameSpec value;
};
struct kgtl_graph {
  kgtl::kg::KnowledgeGraph value;
};
struct kgtl_params {
  kgtl::qnet::Parameters value;
};

namespace {

using nlohmann::json;
using namespace kgtl;

thread_local std::string g_last_error;

kgtl_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return KGTL_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return KGTL_ERR_IO;
    case ErrorCode::kFormat: return KGTL_ERR_FORMAT;
    case ErrorCode::kConfig: return KGTL_ERR_CONFIG;
    case ErrorCode::kInternal: return KGTL_ERR_INTERNAL;
  }
  return KGTL_ERR_INTERNAL;
}

template <typename F>
kgtl_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return KGTL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return KGTL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KGTL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return KGTL_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(name) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json options(const char* text) {
  if (!text || !*text) return json::object();
  try {
    json j = json::parse(text);
    if (!j.is_object()) fail(ErrorCode::kConfig, "options must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, std::string("options: ") + e.what());
  }
}

template <typename T>
void take(json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kConfig, std::string("option '") + key + "' has the wrong type");
  }
  j.erase(key);
}

void no_leftovers(const json& j) {
  if (!j.empty()) fail(ErrorCode::kConfig, "unknown option '" + j.begin().key() + "'");
}

std::string lines(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += x + "\n";
  return out;
}

const kg::KnowledgeGraph* graph_of(const kgtl_graph* g) { return g ? &g->value : nullptr; }

}  // namespace

extern "C" {

const char* kgtl_version(void) { return "1.0.0"; }

const char* kgtl_last_error(void) { return g_last_error.c_str(); }

const char* kgtl_status_name(kgtl_status status) {
  switch (status) {
    case KGTL_OK: return "ok";
    case KGTL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case KGTL_ERR_IO: return "i/o error";
    case KGTL_ERR_FORMAT: return "format error";
    case KGTL_ERR_CONFIG: return "config error";
    case KGTL_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void kgtl_string_free(char* s) { std::free(s); }

kgtl_status kgtl_spec_generate(const char* theme, uint64_t seed, int rooms, int quest_len, double vocab_scale,
                               kgtl_spec** out) {
  return guarded([&] {
    need(theme, "theme");
    need(out, "out");
    *out = new kgtl_spec{engine::generate_game(engine::parse_theme(theme), seed, rooms, quest_len, vocab_scale)};
  });
}

kgtl_status kgtl_spec_load(const char* path, kgtl_spec** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new kgtl_spec{engine::spec_from_json(read_file(path))};
  });
}

kgtl_status kgtl_spec_save(const kgtl_spec* spec, const char* path) {
  return guarded([&] {
    need(spec, "spec");
    need(path, "path");
    write_file(path, engine::spec_to_json(spec->value));
  });
}

kgtl_status kgtl_spec_to_json(const kgtl_spec* spec, char** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    *out = dup(engine::spec_to_json(spec->value));
  });
}

kgtl_status kgtl_spec_walkthrough_json(const kgtl_spec* spec, char** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    *out = dup(engine::walkthrough_to_json(engine::Game(spec->value).oracle_walkthrough()));
  });
}

void kgtl_spec_free(kgtl_spec* spec) { delete spec; }

kgtl_status kgtl_graph_from_guide(const char* guide_path, kgtl_graph** out) {
  return guarded([&] {
    need(guide_path, "guide_path");
    need(out, "out");
    *out = new kgtl_graph{kg::seed_graph_from_guide_file(guide_path)};
  });
}

kgtl_status kgtl_graph_from_walkthrough(const kgtl_spec* spec, const kgtl_graph* seed, kgtl_graph** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    const auto trace = engine::Game(spec->value).oracle_walkthrough();
    *out = new kgtl_graph{kg::graph_from_walkthrough(trace, seed ? seed->value : kg::KnowledgeGraph{})};
  });
}

kgtl_status kgtl_graph_from_trace_file(const char* path, const kgtl_graph* seed, kgtl_graph** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto trace = engine::walkthrough_from_json(read_file(path));
    *out = new kgtl_graph{kg::graph_from_walkthrough(trace, seed ? seed->value : kg::KnowledgeGraph{})};
  });
}

kgtl_status kgtl_graph_load(const char* path, kgtl_graph** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new kgtl_graph{kg::KnowledgeGraph::from_tsv(read_file(path))};
  });
}

kgtl_status kgtl_graph_save(const kgtl_graph* graph, const char* path) {
  return guarded([&] {
    need(graph, "graph");
    need(path, "path");
    write_file(path, graph->value.to_tsv());
  });
}

kgtl_status kgtl_graph_to_tsv(const kgtl_graph* graph, char** out) {
  return guarded([&] {
    need(graph, "graph");
    need(out, "out");
    *out = dup(graph->value.to_tsv());
  });
}

size_t kgtl_graph_size(const kgtl_graph* graph) { return graph ? graph->value.size() : 0; }

void kgtl_graph_free(kgtl_graph* graph) { delete graph; }

kgtl_status kgtl_extract_text(const char* text, const char* current_room, char** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    const auto triples = kg::extract_text(text, current_room ? current_room : "", kg::Provenance::kObserved);
    *out = dup(kg::KnowledgeGraph(triples).to_tsv());
  });
}

kgtl_status kgtl_actions_full(const kgtl_spec* spec, char** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    *out = dup(lines(act::full_action_set(spec->value).texts()));
  });
}

kgtl_status kgtl_actions_prune(const kgtl_spec* spec, const kgtl_graph* graph, int k, char** out) {
  return guarded([&] {
    need(spec, "spec");
    need(graph, "graph");
    need(out, "out");
    *out = dup(lines(act::prune_actions(graph->value, act::full_action_set(spec->value), k).texts()));
  });
}

kgtl_status kgtl_params_load(const char* path, kgtl_params** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new kgtl_params{qnet::load_params_file(path)};
  });
}

kgtl_status kgtl_params_save(const kgtl_params* params, const char* path) {
  return guarded([&] {
    need(params, "params");
    need(path, "path");
    qnet::save_params_file(params->value, path);
  });
}

void kgtl_params_free(kgtl_params* params) { delete params; }

kgtl_status kgtl_pretrain(const char* theme, const char* options_json, const kgtl_graph* seed, kgtl_params** out,
                          char** report_json) {
  return guarded([&] {
    need(theme, "theme");
    need(out, "out");
    const auto th = engine::parse_theme(theme);
    json o = options(options_json);
    harness::PretrainConfig pc;
    std::uint64_t rng_seed = 1;
    int dim = agent::default_dim(th);
    int prune_k = act::kDefaultPruneWidth;
    take(o, "games", pc.games);
    take(o, "rooms", pc.rooms);
    take(o, "quest_len", pc.quest_len);
    take(o, "corpus_seed", pc.corpus_seed);
    take(o, "epochs", pc.epochs);
    take(o, "lr", pc.lr);
    take(o, "seed", rng_seed);
    take(o, "dim", dim);
    take(o, "prune_k", prune_k);
    no_leftovers(o);
    if (pc.games < 5 || pc.epochs < 0 || pc.lr <= 0.0 || dim < 1 || prune_k < 1)
      fail(ErrorCode::kConfig, "invalid pretraining options");
    auto r = harness::pretrain_on_corpus(th, pc, rng_seed, dim, prune_k, graph_of(seed));
    if (report_json) {
      json rep{{"heldout_accuracy_before", r.before.accuracy},
               {"heldout_accuracy_after", r.after.accuracy},
               {"train_accuracy_after", r.train.accuracy},
               {"random_baseline", r.after.random_baseline},
               {"heldout_examples", r.after.examples},
               {"epoch_loss", r.epoch_loss}};
      *report_json = dup(rep.dump(2) + "\n");
    }
    *out = new kgtl_params{std::move(r.params)};
  });
}

kgtl_status kgtl_train(const kgtl_spec* spec, const char* config_json, const kgtl_params* init,
                       const kgtl_graph* seed, double bonus_scale, kgtl_params** out, char** log_csv,
                       char** meta_json) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    const auto cfg = harness::train_config_from_json(config_json && *config_json ? config_json : "{}");
    const auto checkpoints = transfer::make_checkpoints(spec->value, bonus_scale);
    agent::TrainInputs in;
    in.init = init ? &init->value : nullptr;
    in.seed_graph = graph_of(seed);
    in.checkpoints = &checkpoints;
    auto r = agent::train(spec->value, cfg, in);
    if (log_csv) *log_csv = dup(r.log.to_csv());
    if (meta_json) *meta_json = dup(r.log.meta_json());
    *out = new kgtl_params{std::move(r.params)};
  });
}

kgtl_status kgtl_transfer(const kgtl_params* source, const kgtl_spec* target, const kgtl_graph* seed,
                          uint64_t rng_seed, kgtl_params** out) {
  return guarded([&] {
    need(source, "source");
    need(target, "target");
    need(out, "out");
    Rng rng(derive_seed(rng_seed, "transfer/target"));
    *out = new kgtl_params{transfer::transfer_parameters(
        source->value, agent::network_vocabulary(target->value, graph_of(seed)), rng)};
  });
}

kgtl_status kgtl_evaluate(const kgtl_spec* spec, const kgtl_params* params, const char* options_json,
                          const kgtl_graph* seed, double bonus_scale, char** metrics_json) {
  return guarded([&] {
    need(spec, "spec");
    need(params, "params");
    need(metrics_json, "metrics_json");
    json o = options(options_json);
    agent::EvalOptions eo;
    std::string mode = "dense";
    take(o, "episodes", eo.episodes);
    take(o, "epsilon", eo.epsilon);
    take(o, "seed", eo.seed);
    take(o, "step_cap", eo.step_cap);
    take(o, "prune_k", eo.prune_k);
    take(o, "reward_mode", mode);
    no_leftovers(o);
    if (eo.episodes < 1 || eo.epsilon < 0.0 || eo.epsilon > 1.0 || eo.step_cap < 1 || eo.prune_k < 1)
      fail(ErrorCode::kConfig, "invalid evaluation options");
    eo.reward_mode = agent::parse_reward_mode(mode);
    const auto checkpoints = transfer::make_checkpoints(spec->value, bonus_scale);
    eo.seed_graph = graph_of(seed);
    eo.checkpoints = &checkpoints;
    const auto m = agent::evaluate(spec->value, params->value, eo);
    json j{{"episodes", eo.episodes},       {"epsilon", eo.epsilon},
           {"mean_reward", m.mean_reward},  {"std_reward", m.std_reward},
           {"mean_steps", m.mean_steps},    {"std_steps", m.std_steps},
           {"completion_rate", m.completion_rate}, {"rewards", m.rewards},
           {"steps", m.steps}};
    *metrics_json = dup(j.dump(2) + "\n");
  });
}

kgtl_status kgtl_experiment_run(const char* config_path, int jobs, const char* out_dir, char** results_markdown) {
  return guarded([&] {
    need(config_path, "config_path");
    need(out_dir, "out_dir");
    const auto cfg = harness::ExperimentConfig::load(config_path);
    const auto r = harness::run_experiment(cfg, jobs, out_dir);
    if (results_markdown) *results_markdown = dup(r.table.to_markdown());
  });
}

kgtl_status kgtl_stats(const kgtl_spec* spec, const kgtl_spec* const* domain, size_t n_domain, char** stats_json) {
  return guarded([&] {
    need(spec, "spec");
    need(stats_json, "stats_json");
    std::vector<engine::GameSpec> dom;
    for (size_t i = 0; i < n_domain; ++i) {
      need(domain[i], "domain entry");
      dom.push_back(domain[i]->value);
    }
    *stats_json = dup(harness::game_stats(spec->value, dom).to_json());
  });
}

kgtl_status kgtl_curves(const char* runs_dir, int window, const char* out_dir) {
  return guarded([&] {
    need(runs_dir, "runs_dir");
    need(out_dir, "out_dir");
    const auto logs = harness::load_run_logs(runs_dir);
    if (logs.empty()) fail(ErrorCode::kIo, std::string("no run logs found in ") + runs_dir);
    harness::emit_curves(logs, window, out_dir);
  });
}

}  // extern "C"
