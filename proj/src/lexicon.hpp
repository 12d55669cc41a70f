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

#include <string>
#include <vector>

#include "kgtl/engine.hpp"

namespace kgtl::engine::detail {

struct Lexicon {
  std::vector<std::string> rooms;
  std::vector<std::string> containers;
  std::string key;
  std::vector<std::string> items;
  std::vector<std::string> hidden_items;  // multi-word proper nouns
  std::vector<std::string> scenery;
  std::vector<std::string> adjectives;
  std::string hiding_clause;  // "hiding" -> "The altar is hiding a verlac ledger."
};

const Lexicon& lexicon(Theme theme);

// Fixed sentence fragments of the observation grammar, placeholders removed.
const std::vector<std::string>& grammar_phrases();
// Words accepted by the command parser (verbs, aliases, prepositions, directions).
const std::vector<std::string>& command_words();

}  // namespace kgtl::engine::detail
