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

#include "lexicon.hpp"

namespace kgtl::engine::detail {

namespace {

Lexicon make_house() {
  Lexicon l;
  l.rooms = {"kitchen",  "pantry",      "hallway",     "bedroom",    "bathroom", "study",
             "attic",    "cellar",      "garage",      "nursery",    "parlor",   "laundry",
             "porch",    "library",     "dining room", "living room", "guest room", "sun room"};
  l.containers = {"chest", "cupboard", "drawer", "wardrobe", "toolbox", "fridge", "cabinet", "trunk"};
  l.key = "key";
  l.items = {"apple", "towel",  "spoon", "book",   "candle", "mug",    "sock",
             "hammer", "plate", "remote", "blanket", "coin", "letter", "umbrella"};
  l.scenery = {"sofa", "table", "bed", "mirror", "lamp", "shelf", "rug", "clock", "sink", "stove"};
  l.adjectives = {"red",  "blue",  "wooden",  "dusty", "clean", "old",    "small",
                  "shiny", "cozy", "green",  "striped", "tidy", "woolen", "plastic"};
  return l;
}

Lexicon make_haunt() {
  Lexicon l;
  l.rooms = {"crypt",         "chapel",          "ossuary",        "belfry",
             "catacombs",     "mausoleum",       "vestry",         "sanctum",
             "gallery",       "conservatory",    "scriptorium",    "undercroft",
             "charnel house", "verlac archive",  "hollow gate",    "marrow hall",
             "thornfield vault", "ashgrove chamber", "morrow cloister", "gibbet yard",
             "witch tower",   "black fen",       "raven loft",     "bone orchard"};
  l.containers = {"sarcophagus", "reliquary", "coffer", "casket", "urn", "tabernacle",
                  "strongbox", "crate"};
  l.key = "sigil";
  l.items = {"grimoire", "candelabra", "skull",  "amulet", "chalice",  "lantern", "rosary",
             "dagger",   "scroll",     "censer", "phylactery", "bell", "talisman", "relic"};
  l.hidden_items = {"verlac ledger", "blackwood locket", "thornfield diary", "morrow deed",
                    "ashgrove map"};
  l.scenery = {"gargoyle", "altar",  "pew",  "tapestry", "portrait", "statue",
               "tombstone", "effigy", "font", "lectern",  "brazier",  "pillar"};
  l.adjectives = {"ancient", "eldritch", "ghastly", "rotting",  "cursed",      "pallid",
                  "spectral", "gaunt",   "crimson", "withered", "blasphemous", "mouldering",
                  "gilded",  "cracked",  "charred", "unholy"};
  l.hiding_clause = "hiding";
  return l;
}

}  // namespace

const Lexicon& lexicon(Theme theme) {
  static const Lexicon house = make_house();
  static const Lexicon haunt = make_haunt();
  return theme == Theme::kHouse ? house : haunt;
}

const std::vector<std::string>& grammar_phrases() {
  static const std::vector<std::string> phrases = {
      "You are in the",
      "There is a here",
      "There is an here",
      "The is",
      "closed",
      "open",
      "locked",
      "In the there is a",
      "Exits",
      "none",
      "You have a",
      "You go",
      "You take the",
      "You open the",
      "You unlock the with the",
      "You put the in the",
      "You cannot go that way",
      "You cannot see any such thing",
      "You already have that",
      "You cannot take that",
      "It is already open",
      "It is locked",
      "You cannot open that",
      "That does not fit the lock",
      "It is not locked",
      "You are not carrying that",
      "It is closed",
      "You cannot put that there",
      std::string(kUnrecognisedVerb),
      "Quest complete",
  };
  return phrases;
}

const std::vector<std::string>& command_words() {
  static const std::vector<std::string> words = {
      "go",    "take", "open",  "unlock", "with",  "put",  "in",    "get",
      "grab",  "walk", "place", "insert", "north", "south", "east", "west"};
  return words;
}

}  // namespace kgtl::engine::detail
