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

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& root() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / "kgtl_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI with KGTL_DATA_DIR pointed at the scratch root; returns the
// exit status.
int run(const std::string& args) {
  const std::string cmd = "KGTL_DATA_DIR='" + (root() / "data").string() + "' '" KGTL_CLI "' " + args +
                          " > '" + (root() / "last.out").string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string last_output() {
  std::ifstream in(root() / "last.out");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string path(const std::string& name) { return "'" + (root() / name).string() + "'"; }

void write(const std::string& name, const std::string& text) { std::ofstream(root() / name) << text; }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("") == 2);
  CHECK(run("gen --frob") == 2);
  CHECK(run("gen --theme castle") == 2);
  CHECK(run("gen --quest 0") == 2);
}

TEST_CASE("missing files exit with 3") {
  CHECK(run("stats --spec /nonexistent/spec.json") == 3);
  CHECK(last_output().find("/nonexistent/spec.json") != std::string::npos);
  CHECK(run("kg seed --guide /nonexistent/guide.txt") == 3);
  CHECK(run("experiment --config /nonexistent/exp.json") == 3);
}

TEST_CASE("bad configs exit with 2") {
  write("bad.json", R"({"schema_version": 1, "bogus": 1})");
  CHECK(run("experiment --config " + path("bad.json")) == 2);
  write("nover.json", R"({"target_spec": "t.json", "arms": ["no-transfer"]})");
  CHECK(run("experiment --config " + path("nover.json")) == 2);
  CHECK(run("gen --theme house --seed 1 --rooms 3 --quest 2 --out " + path("s.json")) == 0);
  write("train_bad.json", R"({"episode_cap": -1})");
  CHECK(run("train --spec " + path("s.json") + " --config " + path("train_bad.json")) == 2);
}

TEST_CASE("default outputs go under the data directory") {
  CHECK(run("gen --theme haunt --seed 3 --rooms 4 --quest 2") == 0);
  CHECK(fs::exists(root() / "data" / "specs" / "haunt_r4_q2_s3.json"));
}

TEST_CASE("a small pipeline end to end") {
  REQUIRE(run("gen --theme house --seed 2 --rooms 3 --quest 2 --out " + path("g.json") + " --walkthrough " +
              path("g.walk.json")) == 0);
  write("guide.txt", "A key can unlock a chest.\n");
  CHECK(run("kg seed --guide " + path("guide.txt") + " --out " + path("seed.tsv")) == 0);
  CHECK(run("kg extract --trace " + path("g.walk.json") + " --out " + path("trace.tsv")) == 0);
  CHECK(run("kg extract --text 'You are in the kitchen. There is a knife here.' --out -") == 0);
  CHECK(last_output().find("knife\tlocated-in\tkitchen\tobserved") != std::string::npos);
  CHECK(run("actions enumerate --spec " + path("g.json") + " --out " + path("full.txt")) == 0);
  CHECK(run("actions prune --spec " + path("g.json") + " --graph " + path("trace.tsv") + " --k 5 --out -") == 0);
  write("train.json", R"({"episode_cap": 3, "dim": 8})");
  REQUIRE(run("train --spec " + path("g.json") + " --config " + path("train.json") + " --seed-graph " +
              path("seed.tsv") + " --out " + path("run")) == 0);
  CHECK(fs::exists(root() / "run" / "params.kgqn"));
  CHECK(fs::exists(root() / "run" / "log.csv"));
  CHECK(fs::exists(root() / "run" / "meta.json"));
  CHECK(run("transfer --params " + path("run/params.kgqn") + " --target " + path("g.json") + " --out " +
            path("moved.kgqn")) == 0);
  CHECK(run("eval --spec " + path("g.json") + " --params " + path("moved.kgqn") +
            " --options '{\"episodes\": 2}' --out -") == 0);
  CHECK(last_output().find("mean_reward") != std::string::npos);
  CHECK(run("stats --spec " + path("g.json") + " --domain " + path("s.json") + " --out -") == 0);
  fs::create_directories(root() / "runs");
  fs::copy_file(root() / "run" / "log.csv", root() / "runs" / "arm_seed1.csv", fs::copy_options::overwrite_existing);
  CHECK(run("curves --runs " + path("runs") + " --window 2 --out " + path("curves")) == 0);
  CHECK(fs::exists(root() / "curves" / "arm.csv"));
  CHECK(run("pretrain --theme house --options '{\"games\": 5, \"rooms\": 3, \"quest_len\": 2, \"epochs\": 1, "
            "\"dim\": 8}' --out " +
            path("pre.kgqn") + " --report -") == 0);
  CHECK(last_output().find("random_baseline") != std::string::npos);
}
