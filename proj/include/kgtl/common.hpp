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

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgtl {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kFormat = 3,
  kConfig = 4,
  kInternal = 5,
};

// Every failure raised by the library carries one of the codes above so the
// C API can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

#define KGTL_REQUIRE(cond, msg)                                   \
  do {                                                            \
    if (!(cond)) ::kgtl::fail(::kgtl::ErrorCode::kInvalidArgument, \
                              std::string(msg));                  \
  } while (0)

// Seed mixing. The named-stream scheme hashes the stream name with FNV-1a and
// folds it into the parent seed through SplitMix64, so each consumer (engine,
// agent, init, ...) draws from an independent stream.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

// Thin wrapper over mt19937_64. The uniform draws are done by hand because the
// std distributions are not specified bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

// Lowercase word tokens ([a-z0-9]+ runs). Used for vocabularies and encoders.
std::vector<std::string> tokenize(std::string_view text);

// Lowercases, drops articles (a/an/the) and collapses whitespace.
std::string normalize_entity(std::string_view text);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// Round-trippable decimal rendering of a double (17 significant digits are
// not needed for reports; this is for deterministic tables).
std::string format_fixed(double v, int decimals);

}  // namespace kgtl
