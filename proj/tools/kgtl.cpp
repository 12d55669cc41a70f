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

// Command-line front end. Talks to the library only through the C API.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "kgtl/kgtl.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Failure {
  int code;
  std::string message;
};

int exit_code(kgtl_status s) {
  switch (s) {
    case KGTL_OK: return kExitOk;
    case KGTL_ERR_INVALID_ARGUMENT:
    case KGTL_ERR_CONFIG: return kExitConfig;
    case KGTL_ERR_IO:
    case KGTL_ERR_FORMAT: return kExitIo;
    default: return kExitInternal;
  }
}

void check(kgtl_status s) {
  if (s != KGTL_OK) throw Failure{exit_code(s), std::string(kgtl_status_name(s)) + ": " + kgtl_last_error()};
}

struct Str {
  char* p = nullptr;
  ~Str() { kgtl_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ~Handle() { Free(p); }
};
using Spec = Handle<kgtl_spec, kgtl_spec_free>;
using Graph = Handle<kgtl_graph, kgtl_graph_free>;
using Params = Handle<kgtl_params, kgtl_params_free>;

fs::path data_root() {
  const char* env = std::getenv("KGTL_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("kgtl_data");
}

// Empty `explicit_path` means a default under the data root.
std::string output_path(const std::string& explicit_path, const fs::path& fallback) {
  fs::path p = explicit_path.empty() ? data_root() / fallback : fs::path(explicit_path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  if (ec) throw Failure{kExitIo, "cannot create directory " + p.parent_path().string() + ": " + ec.message()};
  return p.string();
}

std::string output_dir(const std::string& explicit_path, const fs::path& fallback) {
  fs::path p = explicit_path.empty() ? data_root() / fallback : fs::path(explicit_path);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Failure{kExitIo, "cannot create directory " + p.string() + ": " + ec.message()};
  return p.string();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitIo, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{kExitIo, "cannot write " + path};
}

// Writes to `path`, or to stdout when it is "-".
void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
    std::cout << "wrote " << path << "\n";
  }
}

Spec load_spec(const std::string& path) {
  Spec s;
  check(kgtl_spec_load(path.c_str(), &s.p));
  return s;
}

Graph load_graph(const std::string& path) {
  Graph g;
  if (!path.empty()) check(kgtl_graph_load(path.c_str(), &g.p));
  return g;
}

Params load_params(const std::string& path) {
  Params p;
  if (!path.empty()) check(kgtl_params_load(path.c_str(), &p.p));
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph DQN with transfer learning for generated text adventures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kgtl_version());
  std::function<void()> action;

  // gen
  struct {
    std::string theme = "house", out, walkthrough;
    std::uint64_t seed = 1;
    int rooms = 8, quest = 4;
    double vocab_scale = 1.0;
  } gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a game spec");
  gen_cmd->add_option("--theme", gen.theme, "house or haunt")->check(CLI::IsMember({"house", "haunt"}));
  gen_cmd->add_option("--seed", gen.seed, "Generation seed");
  gen_cmd->add_option("--rooms", gen.rooms, "Number of rooms")->check(CLI::Range(1, 64));
  gen_cmd->add_option("--quest-len,--quest", gen.quest, "Quest length")->check(CLI::Range(1, 32));
  gen_cmd->add_option("--vocab-scale", gen.vocab_scale, "Fraction of the theme lexicon to draw from");
  gen_cmd->add_option("--out", gen.out, "Spec path (default: <data>/specs/...)");
  gen_cmd->add_option("--walkthrough", gen.walkthrough, "Also write the oracle walkthrough here");
  gen_cmd->callback([&] {
    action = [&] {
      Spec s;
      check(kgtl_spec_generate(gen.theme.c_str(), gen.seed, gen.rooms, gen.quest, gen.vocab_scale, &s.p));
      const std::string name = gen.theme + "_r" + std::to_string(gen.rooms) + "_q" + std::to_string(gen.quest) +
                               "_s" + std::to_string(gen.seed) + ".json";
      const std::string path = output_path(gen.out, fs::path("specs") / name);
      check(kgtl_spec_save(s.p, path.c_str()));
      std::cout << "wrote " << path << "\n";
      if (!gen.walkthrough.empty()) {
        Str w;
        check(kgtl_spec_walkthrough_json(s.p, &w.p));
        emit(output_path(gen.walkthrough, ""), w.str());
      }
    };
  });

  // kg
  auto* kg_cmd = app.add_subcommand("kg", "Knowledge-graph tools");
  kg_cmd->require_subcommand(1);
  struct {
    std::string guide, out;
  } kg_seed;
  auto* kg_seed_cmd = kg_cmd->add_subcommand("seed", "Build a seed graph from a guide");
  kg_seed_cmd->add_option("--guide", kg_seed.guide, "Guide text file")->required();
  kg_seed_cmd->add_option("--out", kg_seed.out, "TSV path (default: <data>/graphs/<guide>.tsv)");
  kg_seed_cmd->callback([&] {
    action = [&] {
      Graph g;
      check(kgtl_graph_from_guide(kg_seed.guide.c_str(), &g.p));
      const std::string path = output_path(kg_seed.out, fs::path("graphs") / (fs::path(kg_seed.guide).stem().string() + ".tsv"));
      check(kgtl_graph_save(g.p, path.c_str()));
      std::cout << "wrote " << path << " (" << kgtl_graph_size(g.p) << " triples)\n";
    };
  });
  struct {
    std::string spec, trace, seed_graph, text, room, out = "-";
  } kg_extract;
  auto* kg_extract_cmd = kg_cmd->add_subcommand("extract", "Extract triples from text or an oracle walkthrough");
  auto* ex_spec = kg_extract_cmd->add_option("--spec", kg_extract.spec, "Replay this spec's oracle walkthrough");
  auto* ex_text = kg_extract_cmd->add_option("--text", kg_extract.text, "Extract from this text");
  auto* ex_trace = kg_extract_cmd->add_option("--trace", kg_extract.trace, "Replay a walkthrough JSON file");
  ex_spec->excludes(ex_text)->excludes(ex_trace);
  ex_trace->excludes(ex_text);
  kg_extract_cmd->add_option("--room", kg_extract.room, "Current room for --text");
  kg_extract_cmd->add_option("--seed-graph", kg_extract.seed_graph, "Initial graph for --spec or --trace");
  kg_extract_cmd->add_option("--out", kg_extract.out, "TSV path, - for stdout");
  kg_extract_cmd->callback([&] {
    action = [&] {
      Str tsv;
      if (!kg_extract.text.empty()) {
        check(kgtl_extract_text(kg_extract.text.c_str(), kg_extract.room.c_str(), &tsv.p));
      } else if (!kg_extract.trace.empty()) {
        Graph seed = load_graph(kg_extract.seed_graph);
        Graph g;
        check(kgtl_graph_from_trace_file(kg_extract.trace.c_str(), seed.p, &g.p));
        check(kgtl_graph_to_tsv(g.p, &tsv.p));
      } else {
        if (kg_extract.spec.empty()) throw Failure{kExitConfig, "kg extract needs --spec, --trace or --text"};
        Spec s = load_spec(kg_extract.spec);
        Graph seed = load_graph(kg_extract.seed_graph);
        Graph g;
        check(kgtl_graph_from_walkthrough(s.p, seed.p, &g.p));
        check(kgtl_graph_to_tsv(g.p, &tsv.p));
      }
      emit(kg_extract.out, tsv.str());
    };
  });

  // actions
  auto* actions_cmd = app.add_subcommand("actions", "Action-space tools");
  actions_cmd->require_subcommand(1);
  struct {
    std::string spec, graph, out = "-";
    int k = 40;
  } acts;
  auto* enum_cmd = actions_cmd->add_subcommand("enumerate", "List the full templated action set");
  enum_cmd->add_option("--spec", acts.spec, "Spec path")->required();
  enum_cmd->add_option("--out", acts.out, "Output path, - for stdout");
  enum_cmd->callback([&] {
    action = [&] {
      Spec s = load_spec(acts.spec);
      Str text;
      check(kgtl_actions_full(s.p, &text.p));
      emit(acts.out, text.str());
    };
  });
  auto* prune_cmd = actions_cmd->add_subcommand("prune", "List the graph-pruned action set");
  prune_cmd->add_option("--spec", acts.spec, "Spec path")->required();
  prune_cmd->add_option("--graph", acts.graph, "Graph TSV")->required();
  prune_cmd->add_option("--k", acts.k, "Prune width")->check(CLI::PositiveNumber);
  prune_cmd->add_option("--out", acts.out, "Output path, - for stdout");
  prune_cmd->callback([&] {
    action = [&] {
      Spec s = load_spec(acts.spec);
      Graph g = load_graph(acts.graph);
      Str text;
      check(kgtl_actions_prune(s.p, g.p, acts.k, &text.p));
      emit(acts.out, text.str());
    };
  });

  // pretrain
  struct {
    std::string theme = "house", options = "{}", seed_graph, out, report;
  } pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "Ranking pretraining on a generated trace corpus");
  pre_cmd->add_option("--theme", pre.theme, "house or haunt")->check(CLI::IsMember({"house", "haunt"}));
  pre_cmd->add_option("--options", pre.options,
                      "JSON object: games, rooms, quest_len, corpus_seed, epochs, lr, seed, dim, prune_k");
  pre_cmd->add_option("--seed-graph", pre.seed_graph, "Seed graph TSV");
  pre_cmd->add_option("--out", pre.out, "Parameter file (default: <data>/params/pretrained_<theme>.kgqn)");
  pre_cmd->add_option("--report", pre.report, "Report JSON path (default: stdout)");
  pre_cmd->callback([&] {
    action = [&] {
      Graph seed = load_graph(pre.seed_graph);
      Params p;
      Str report;
      check(kgtl_pretrain(pre.theme.c_str(), pre.options.c_str(), seed.p, &p.p, &report.p));
      const std::string path = output_path(pre.out, fs::path("params") / ("pretrained_" + pre.theme + ".kgqn"));
      check(kgtl_params_save(p.p, path.c_str()));
      std::cout << "wrote " << path << "\n";
      emit(pre.report.empty() ? "-" : output_path(pre.report, ""), report.str());
    };
  });

  // train
  struct {
    std::string spec, config, init, seed_graph, out;
    double bonus = 0.5;
  } tr;
  auto* train_cmd = app.add_subcommand("train", "Train a DQN agent on one game");
  train_cmd->add_option("--spec", tr.spec, "Spec path")->required();
  train_cmd->add_option("--config", tr.config, "Training-config JSON file");
  train_cmd->add_option("--init", tr.init, "Initial parameters");
  train_cmd->add_option("--seed-graph", tr.seed_graph, "Seed graph TSV");
  train_cmd->add_option("--bonus", tr.bonus, "Checkpoint bonus for dense rewards");
  train_cmd->add_option("--out", tr.out, "Output directory (default: <data>/runs/<spec>)");
  train_cmd->callback([&] {
    action = [&] {
      const std::string cfg = tr.config.empty() ? "{}" : read_text(tr.config);
      Spec s = load_spec(tr.spec);
      Params init = load_params(tr.init);
      Graph seed = load_graph(tr.seed_graph);
      Params out;
      Str log, meta;
      check(kgtl_train(s.p, cfg.c_str(), init.p, seed.p, tr.bonus, &out.p, &log.p, &meta.p));
      const fs::path dir = output_dir(tr.out, fs::path("runs") / fs::path(tr.spec).stem());
      check(kgtl_params_save(out.p, (dir / "params.kgqn").string().c_str()));
      write_text((dir / "log.csv").string(), log.str());
      write_text((dir / "meta.json").string(), meta.str());
      std::cout << "wrote " << dir.string() << "/{params.kgqn,log.csv,meta.json}\n" << meta.str();
    };
  });

  // transfer
  struct {
    std::string params, target, seed_graph, out;
    std::uint64_t seed = 1;
  } xfer;
  auto* xfer_cmd = app.add_subcommand("transfer", "Map parameters onto a target game's vocabulary");
  xfer_cmd->add_option("--params", xfer.params, "Source parameters")->required();
  xfer_cmd->add_option("--target", xfer.target, "Target spec")->required();
  xfer_cmd->add_option("--seed-graph", xfer.seed_graph, "Seed graph TSV");
  xfer_cmd->add_option("--seed", xfer.seed, "Seed for fresh word rows");
  xfer_cmd->add_option("--out", xfer.out, "Output parameters (default: <data>/params/<target>_transfer.kgqn)");
  xfer_cmd->callback([&] {
    action = [&] {
      Params src = load_params(xfer.params);
      Spec tgt = load_spec(xfer.target);
      Graph seed = load_graph(xfer.seed_graph);
      Params out;
      check(kgtl_transfer(src.p, tgt.p, seed.p, xfer.seed, &out.p));
      const std::string path =
          output_path(xfer.out, fs::path("params") / (fs::path(xfer.target).stem().string() + "_transfer.kgqn"));
      check(kgtl_params_save(out.p, path.c_str()));
      std::cout << "wrote " << path << "\n";
    };
  });

  // eval
  struct {
    std::string spec, params, seed_graph, options = "{}", out = "-";
    double bonus = 0.5;
  } ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate frozen parameters");
  eval_cmd->add_option("--spec", ev.spec, "Spec path")->required();
  eval_cmd->add_option("--params", ev.params, "Parameters")->required();
  eval_cmd->add_option("--seed-graph", ev.seed_graph, "Seed graph TSV");
  eval_cmd->add_option("--options", ev.options, "JSON object: episodes, epsilon, seed, step_cap, prune_k, reward_mode");
  eval_cmd->add_option("--bonus", ev.bonus, "Checkpoint bonus for dense rewards");
  eval_cmd->add_option("--out", ev.out, "Metrics JSON path, - for stdout");
  eval_cmd->callback([&] {
    action = [&] {
      Spec s = load_spec(ev.spec);
      Params p = load_params(ev.params);
      Graph seed = load_graph(ev.seed_graph);
      Str metrics;
      check(kgtl_evaluate(s.p, p.p, ev.options.c_str(), seed.p, ev.bonus, &metrics.p));
      emit(ev.out == "-" ? "-" : output_path(ev.out, ""), metrics.str());
    };
  });

  // experiment
  struct {
    std::string config, out;
    int jobs = 1;
  } exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run an ablation experiment");
  exp_cmd->add_option("--config", exp.config, "Experiment config JSON")->required();
  exp_cmd->add_option("--jobs", exp.jobs, "Worker threads")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--out", exp.out, "Output directory (default: <data>/experiments/<config>)");
  exp_cmd->callback([&] {
    action = [&] {
      const std::string dir = output_dir(exp.out, fs::path("experiments") / fs::path(exp.config).stem());
      Str table;
      check(kgtl_experiment_run(exp.config.c_str(), exp.jobs, dir.c_str(), &table.p));
      std::cout << table.str() << "results in " << dir << "\n";
    };
  });

  // stats
  struct {
    std::string spec, out = "-";
    std::vector<std::string> domain;
  } st;
  auto* stats_cmd = app.add_subcommand("stats", "Game statistics");
  stats_cmd->add_option("--spec", st.spec, "Spec path")->required();
  stats_cmd->add_option("--domain", st.domain, "Domain spec paths (default: the spec itself)");
  stats_cmd->add_option("--out", st.out, "JSON path, - for stdout");
  stats_cmd->callback([&] {
    action = [&] {
      Spec s = load_spec(st.spec);
      std::vector<Spec> dom;
      for (const auto& d : st.domain) dom.push_back(load_spec(d));
      std::vector<const kgtl_spec*> ptrs;
      for (const auto& d : dom) ptrs.push_back(d.p);
      if (ptrs.empty()) ptrs.push_back(s.p);
      Str json;
      check(kgtl_stats(s.p, ptrs.data(), ptrs.size(), &json.p));
      emit(st.out == "-" ? "-" : output_path(st.out, ""), json.str());
    };
  });

  // curves
  struct {
    std::string runs, out;
    int window = 10;
  } cv;
  auto* curves_cmd = app.add_subcommand("curves", "Reward curves from run logs");
  curves_cmd->add_option("--runs", cv.runs, "Directory of <label>_seed<k>.csv logs")->required();
  curves_cmd->add_option("--window", cv.window, "Moving-average window")->check(CLI::PositiveNumber);
  curves_cmd->add_option("--out", cv.out, "Output directory (default: <data>/curves)");
  curves_cmd->callback([&] {
    action = [&] {
      const std::string dir = output_dir(cv.out, "curves");
      check(kgtl_curves(cv.runs.c_str(), cv.window, dir.c_str()));
      std::cout << "wrote curves to " << dir << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (action) action();
    return kExitOk;
  } catch (const Failure& f) {
    std::cerr << "kgtl: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "kgtl: " << e.what() << "\n";
    return kExitInternal;
  }
}
