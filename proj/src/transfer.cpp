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

#include "kgtl/transfer.hpp"

#include <algorithm>
#include <filesystem>
#include <json.hpp>
#include <set>

#include "kgtl/common.hpp"

namespace kgtl::transfer {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Checkpoints

CheckpointSet::CheckpointSet(std::vector<Checkpoint> checkpoints, double scale)
    : checkpoints_(std::move(checkpoints)), scale_(scale) {
  KGTL_REQUIRE(scale > 0.0 && scale < 1.0, "checkpoint bonus must lie in (0, 1)");
  for (const auto& c : checkpoints_)
    KGTL_REQUIRE(c.bonus > 0.0 && c.bonus < 1.0, "checkpoint bonus must lie in (0, 1)");
}

int CheckpointSet::find(int room, int quest_index, std::string_view action) const {
  for (std::size_t i = 0; i < checkpoints_.size(); ++i) {
    const auto& c = checkpoints_[i];
    if (c.room == room && c.quest_index == quest_index && c.action == action) return static_cast<int>(i);
  }
  return -1;
}

std::string CheckpointSet::to_json() const {
  json arr = json::array();
  for (const auto& c : checkpoints_)
    arr.push_back({{"room", c.room}, {"quest_index", c.quest_index}, {"action", c.action}, {"bonus", c.bonus}});
  return arr.dump(2) + "\n";
}

CheckpointSet CheckpointSet::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (!j.is_array()) fail(ErrorCode::kFormat, "checkpoint file must be a JSON list");
    std::vector<Checkpoint> cs;
    double scale = kDefaultBonus;
    for (const auto& e : j) {
      cs.push_back({e.at("room").get<int>(), e.at("quest_index").get<int>(), e.at("action").get<std::string>(),
                    e.at("bonus").get<double>()});
      scale = cs.back().bonus;
    }
    return CheckpointSet(std::move(cs), scale);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed checkpoint file: ") + e.what());
  }
}

CheckpointSet make_checkpoints(const engine::Game& game, double scale) {
  KGTL_REQUIRE(scale > 0.0 && scale < 1.0, "checkpoint scale must be in (0, 1), below the smallest reward");
  std::vector<Checkpoint> cs;
  for (const auto& s : game.oracle_walkthrough().steps) cs.push_back({s.room, s.quest_index, s.action, scale});
  return CheckpointSet(std::move(cs), scale);
}

CheckpointSet make_checkpoints(const engine::GameSpec& spec, double scale) {
  KGTL_REQUIRE(scale > 0.0 && scale < 1.0, "checkpoint scale must be in (0, 1), below the smallest reward");
  return make_checkpoints(engine::Game(spec), scale);
}

CheckpointTracker::CheckpointTracker(const CheckpointSet* set) : set_(set) { reset(); }

void CheckpointTracker::reset() { claimed_.assign(set_ ? set_->size() : 0, false); }

double CheckpointTracker::augment_reward(int room, int quest_index, std::string_view action) {
  if (!set_) return 0.0;
  const int i = set_->find(room, quest_index, action);
  if (i < 0 || claimed_[static_cast<std::size_t>(i)]) return 0.0;
  claimed_[static_cast<std::size_t>(i)] = true;
  return set_->checkpoints()[static_cast<std::size_t>(i)].bonus;
}

double max_augmented_reward(const engine::GameSpec& spec, double scale) {
  const double n = static_cast<double>(spec.quest.size());
  return n + spec.completion_reward + n * scale;
}

// ---------------------------------------------------------------------------
// Corpus

std::vector<std::string> TraceCorpus::vocabulary() const {
  std::set<std::string> words;
  for (const auto& s : specs) words.insert(s.vocabulary.begin(), s.vocabulary.end());
  return {words.begin(), words.end()};
}

TraceCorpus build_trace_corpus(engine::Theme theme, int n_games, std::uint64_t seed, const CorpusOptions& options) {
  KGTL_REQUIRE(n_games >= 5, "a trace corpus needs at least 5 games");
  TraceCorpus c;
  for (int i = 0; i < n_games; ++i) {
    const std::uint64_t game_seed = derive_seed(seed, "corpus/" + std::to_string(i));
    c.specs.push_back(engine::generate_game(theme, game_seed, options.n_rooms, options.quest_len, options.vocab_scale));
    c.traces.push_back(engine::Game(c.specs.back()).oracle_walkthrough());
  }
  std::vector<int> order(static_cast<std::size_t>(n_games));
  for (int i = 0; i < n_games; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, "corpus/split"));
  rng.shuffle(order);
  const int n_test = n_games / 5;
  c.test.assign(order.begin(), order.begin() + n_test);
  c.train.assign(order.begin() + n_test, order.end());
  std::sort(c.train.begin(), c.train.end());
  std::sort(c.test.begin(), c.test.end());
  return c;
}

void save_corpus(const TraceCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  json manifest{{"format", "kgtl-corpus"}, {"version", 1}, {"games", json::array()}};
  for (std::size_t i = 0; i < corpus.specs.size(); ++i) {
    const std::string base = "game_" + std::to_string(i);
    write_file((fs::path(dir) / (base + ".json")).string(), engine::spec_to_json(corpus.specs[i]));
    write_file((fs::path(dir) / (base + ".trace.json")).string(), engine::walkthrough_to_json(corpus.traces[i]));
    manifest["games"].push_back(base);
  }
  manifest["train"] = corpus.train;
  manifest["test"] = corpus.test;
  write_file((fs::path(dir) / "split.json").string(), manifest.dump(2) + "\n");
}

TraceCorpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  TraceCorpus c;
  try {
    const json m = json::parse(read_file((fs::path(dir) / "split.json").string()));
    if (m.value("format", "") != "kgtl-corpus") fail(ErrorCode::kFormat, "not a kgtl corpus manifest");
    for (const auto& g : m.at("games")) {
      const std::string base = g.get<std::string>();
      c.specs.push_back(engine::spec_from_json(read_file((fs::path(dir) / (base + ".json")).string())));
      c.traces.push_back(engine::walkthrough_from_json(read_file((fs::path(dir) / (base + ".trace.json")).string())));
    }
    c.train = m.at("train").get<std::vector<int>>();
    c.test = m.at("test").get<std::vector<int>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed corpus manifest: ") + e.what());
  }
  for (int i : c.train) KGTL_REQUIRE(i >= 0 && i < static_cast<int>(c.specs.size()), "corpus split index out of range");
  for (int i : c.test) KGTL_REQUIRE(i >= 0 && i < static_cast<int>(c.specs.size()), "corpus split index out of range");
  return c;
}

// ---------------------------------------------------------------------------
// Pretraining

std::vector<RankingExample> ranking_examples(const engine::GameSpec& spec, const engine::Walkthrough& trace,
                                             int prune_k, const kg::KnowledgeGraph* seed_graph) {
  const act::ActionSet full = act::full_action_set(spec);
  std::vector<RankingExample> out;
  kg::KnowledgeGraph graph = seed_graph ? *seed_graph : kg::KnowledgeGraph{};
  for (const auto& step : trace.steps) {
    const std::string room = graph.player_location().value_or("");
    graph = kg::update_graph(graph, kg::extract_triples(step.observation, room));
    auto cands = act::candidate_actions(graph, full, prune_k);
    if (!std::binary_search(cands.begin(), cands.end(), step.action)) {
      cands.insert(std::lower_bound(cands.begin(), cands.end(), step.action), step.action);
    }
    RankingExample ex;
    ex.graph = graph;
    ex.observation = step.observation.text;
    ex.gold = static_cast<int>(std::lower_bound(cands.begin(), cands.end(), step.action) - cands.begin());
    ex.candidates = std::move(cands);
    out.push_back(std::move(ex));
  }
  return out;
}

RankingScore ranking_accuracy(const std::vector<RankingExample>& examples, const qnet::Parameters& params) {
  RankingScore r;
  if (examples.empty()) return r;
  int hits = 0;
  double base = 0.0;
  for (const auto& ex : examples) {
    const auto s = qnet::encode_state(ex.graph, ex.observation, params);
    int best = 0;
    double best_q = -INFINITY;
    for (std::size_t i = 0; i < ex.candidates.size(); ++i) {
      const double q = qnet::q_value(s, qnet::encode_action(ex.candidates[i], params), params);
      if (q > best_q) {
        best_q = q;
        best = static_cast<int>(i);
      }
    }
    hits += best == ex.gold ? 1 : 0;
    base += 1.0 / static_cast<double>(ex.candidates.size());
  }
  r.examples = static_cast<int>(examples.size());
  r.accuracy = static_cast<double>(hits) / r.examples;
  r.random_baseline = base / r.examples;
  return r;
}

PretrainResult pretrain(const TraceCorpus& corpus, const qnet::Parameters& params, const PretrainOptions& options) {
  KGTL_REQUIRE(!corpus.train.empty(), "pretraining needs a non-empty training split");
  KGTL_REQUIRE(options.epochs >= 0, "epochs must be non-negative");
  KGTL_REQUIRE(options.lr > 0.0, "learning rate must be positive");
  std::vector<RankingExample> train, test;
  for (int i : corpus.train) {
    auto ex = ranking_examples(corpus.specs[i], corpus.traces[i], options.prune_k, options.seed_graph);
    std::move(ex.begin(), ex.end(), std::back_inserter(train));
  }
  for (int i : corpus.test) {
    auto ex = ranking_examples(corpus.specs[i], corpus.traces[i], options.prune_k, options.seed_graph);
    std::move(ex.begin(), ex.end(), std::back_inserter(test));
  }
  PretrainResult out;
  out.params = params;
  out.before = ranking_accuracy(test, params);
  Rng rng(derive_seed(options.seed, "pretrain"));
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t idx : order) {
      const auto& ex = train[idx];
      qnet::Tape t(out.params, true);
      qnet::Var s = qnet::encode_state(t, ex.graph, ex.observation);
      std::vector<qnet::Var> scores;
      scores.reserve(ex.candidates.size());
      for (const auto& c : ex.candidates) scores.push_back(qnet::q_value(t, s, qnet::encode_action(t, c)));
      qnet::Var loss = t.softmax_xent(scores, ex.gold);
      total += t.scalar_value(loss);
      qnet::Gradients g = t.backward(loss);
      qnet::sgd_step(out.params, g, options.lr);
    }
    out.epoch_loss.push_back(train.empty() ? 0.0 : total / static_cast<double>(train.size()));
  }
  out.after = ranking_accuracy(test, out.params);
  out.train = ranking_accuracy(train, out.params);
  return out;
}

// ---------------------------------------------------------------------------
// Parameter transfer

qnet::Parameters transfer_parameters(const qnet::Parameters& source, const std::vector<std::string>& target_vocab,
                                     Rng& rng) {
  // Building fresh parameters with the target vocabulary fixes the layout;
  // every segment is then overwritten except new word rows.
  qnet::Parameters out = qnet::init_params(target_vocab, source.dim(), rng);
  KGTL_REQUIRE(out.dim() == source.dim(), "dimension mismatch");
  for (int s = 0; s < qnet::kNumSegments; ++s) {
    const auto seg = static_cast<qnet::Seg>(s);
    if (seg == qnet::Seg::kWordEmbeddings) continue;
    KGTL_REQUIRE(out.seg(seg).data.size() == source.seg(seg).data.size(), "segment shape mismatch");
    out.seg(seg).data = source.seg(seg).data;
  }
  auto& dst = out.seg(qnet::Seg::kWordEmbeddings);
  const auto& src = source.seg(qnet::Seg::kWordEmbeddings);
  const int d = source.dim();
  for (int r = 0; r < dst.rows; ++r) {
    const std::string& w = dst.labels[r];
    // UNK is part of the network, not of either vocabulary.
    const int sr = r == 0 ? 0 : source.word_row(w);
    if (r != 0 && sr == 0) continue;
    std::copy(src.row(sr), src.row(sr) + d, dst.row(r));
  }
  return out;
}

double vocab_overlap(const std::vector<std::string>& vocab, const std::vector<std::string>& domain) {
  const std::set<std::string> a(vocab.begin(), vocab.end());
  if (a.empty()) return 0.0;
  const std::set<std::string> b(domain.begin(), domain.end());
  std::size_t shared = 0;
  for (const auto& w : a) shared += b.count(w);
  return 100.0 * static_cast<double>(shared) / static_cast<double>(a.size());
}

}  // namespace kgtl::transfer
