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

/* C interface to the kgtl library.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns a kgtl_status; on failure kgtl_last_error() describes
 * the problem (per thread, valid until the next call on that thread).
 * Strings returned through char** out-parameters are owned by the caller and
 * released with kgtl_string_free. Optional handle arguments may be NULL. */
#ifndef KGTL_KGTL_H_
#define KGTL_KGTL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KGTL_API __declspec(dllexport)
#else
#define KGTL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kgtl_status {
  KGTL_OK = 0,
  KGTL_ERR_INVALID_ARGUMENT = 1,
  KGTL_ERR_IO = 2,
  KGTL_ERR_FORMAT = 3,
  KGTL_ERR_CONFIG = 4,
  KGTL_ERR_INTERNAL = 5
} kgtl_status;

typedef struct kgtl_spec kgtl_spec;
typedef struct kgtl_graph kgtl_graph;
typedef struct kgtl_params kgtl_params;

KGTL_API const char* kgtl_version(void);
KGTL_API const char* kgtl_last_error(void);
KGTL_API const char* kgtl_status_name(kgtl_status status);
KGTL_API void kgtl_string_free(char* s);

/* Game specs. theme is "house" or "haunt". */
KGTL_API kgtl_status kgtl_spec_generate(const char* theme, uint64_t seed, int rooms, int quest_len,
                                        double vocab_scale, kgtl_spec** out);
KGTL_API kgtl_status kgtl_spec_load(const char* path, kgtl_spec** out);
KGTL_API kgtl_status kgtl_spec_save(const kgtl_spec* spec, const char* path);
KGTL_API kgtl_status kgtl_spec_to_json(const kgtl_spec* spec, char** out);
KGTL_API kgtl_status kgtl_spec_walkthrough_json(const kgtl_spec* spec, char** out);
KGTL_API void kgtl_spec_free(kgtl_spec* spec);

/* Knowledge graphs, serialized as TSV (subject, relation, object, provenance). */
KGTL_API kgtl_status kgtl_graph_from_guide(const char* guide_path, kgtl_graph** out);
KGTL_API kgtl_status kgtl_graph_from_walkthrough(const kgtl_spec* spec, const kgtl_graph* seed, kgtl_graph** out);
/* Replays a walkthrough JSON file (as written by gen --walkthrough). */
KGTL_API kgtl_status kgtl_graph_from_trace_file(const char* path, const kgtl_graph* seed, kgtl_graph** out);
KGTL_API kgtl_status kgtl_graph_load(const char* path, kgtl_graph** out);
KGTL_API kgtl_status kgtl_graph_save(const kgtl_graph* graph, const char* path);
KGTL_API kgtl_status kgtl_graph_to_tsv(const kgtl_graph* graph, char** out);
KGTL_API size_t kgtl_graph_size(const kgtl_graph* graph);
KGTL_API void kgtl_graph_free(kgtl_graph* graph);
/* Triples extracted from free text, as TSV. */
KGTL_API kgtl_status kgtl_extract_text(const char* text, const char* current_room, char** out);

/* Action spaces, one action per line. */
KGTL_API kgtl_status kgtl_actions_full(const kgtl_spec* spec, char** out);
KGTL_API kgtl_status kgtl_actions_prune(const kgtl_spec* spec, const kgtl_graph* graph, int k, char** out);

/* Parameters. */
KGTL_API kgtl_status kgtl_params_load(const char* path, kgtl_params** out);
KGTL_API kgtl_status kgtl_params_save(const kgtl_params* params, const char* path);
KGTL_API void kgtl_params_free(kgtl_params* params);

/* Ranking pretraining on a generated trace corpus. options_json keys: games,
 * rooms, quest_len, corpus_seed, epochs, lr, seed, dim, prune_k. The report is
 * a JSON object with held-out accuracy before and after and the random
 * baseline. */
KGTL_API kgtl_status kgtl_pretrain(const char* theme, const char* options_json, const kgtl_graph* seed,
                                   kgtl_params** out, char** report_json);

/* DQN training. config_json holds training-config overrides (may be NULL or
 * "{}"). Dense rewards use oracle checkpoints with the given bonus scale. */
KGTL_API kgtl_status kgtl_train(const kgtl_spec* spec, const char* config_json, const kgtl_params* init,
                                const kgtl_graph* seed, double bonus_scale, kgtl_params** out,
                                char** log_csv, char** meta_json);

/* Copies parameters onto the vocabulary of target (plus seed-graph words). */
KGTL_API kgtl_status kgtl_transfer(const kgtl_params* source, const kgtl_spec* target, const kgtl_graph* seed,
                                   uint64_t rng_seed, kgtl_params** out);

/* Frozen-parameter evaluation. options_json keys: episodes, epsilon, seed,
 * step_cap, prune_k, reward_mode. */
KGTL_API kgtl_status kgtl_evaluate(const kgtl_spec* spec, const kgtl_params* params, const char* options_json,
                                   const kgtl_graph* seed, double bonus_scale, char** metrics_json);

/* Runs an experiment config on `jobs` workers, writing under out_dir. */
KGTL_API kgtl_status kgtl_experiment_run(const char* config_path, int jobs, const char* out_dir,
                                         char** results_markdown);

/* Game statistics against a domain of specs, as JSON. */
KGTL_API kgtl_status kgtl_stats(const kgtl_spec* spec, const kgtl_spec* const* domain, size_t n_domain,
                                char** stats_json);

/* Reward curves from the "<label>_seed<k>.csv" logs of a runs directory. */
KGTL_API kgtl_status kgtl_curves(const char* runs_dir, int window, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* KGTL_KGTL_H_ */
