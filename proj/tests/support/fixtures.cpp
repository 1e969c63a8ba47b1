// Copyright 2026 the groundrank authors
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

#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <cctype>
#include <regex>
#include <set>

namespace groundrank::testing {

namespace {

std::set<std::string> token_set(const std::string& text) {
  static const std::regex word("[A-Za-z0-9]+");
  std::set<std::string> tokens;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), word); it != std::sregex_iterator();
       ++it) {
    std::string t = it->str();
    for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    tokens.insert(t);
  }
  return tokens;
}

const char* const kTopics[] = {"castle", "river", "museum", "bridge", "temple",
                               "harbor", "canyon", "garden", "tower",  "market"};

}  // namespace

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("groundrank-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

double jaccard_oracle(const std::string& a, const std::string& b) {
  const auto sa = token_set(a);
  const auto sb = token_set(b);
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

std::pair<std::size_t, std::size_t> brute_force_argmax(const std::vector<double>& flat,
                                                       std::size_t cols) {
  const auto it = std::max_element(flat.begin(), flat.end());
  const auto k = static_cast<std::size_t>(it - flat.begin());
  return {k / cols, k % cols};
}

DialogueTurn seven_wonders_turn() {
  DialogueTurn turn;
  turn.turn_id = "seven-wonders";
  turn.dialogue_text = "Wow, what is this?";
  turn.persona_candidates = {"I want to visit Seven Wonders of the Ancient World.",
                             "I like to eat spicy food.", "I have a pet cat.",
                             "I am interested in pyramids.", "I often travel by train."};
  turn.knowledge_candidates = {
      "The Great Pyramid of Giza is the oldest of the Seven Wonders of the Ancient World.",
      "Cairo is the capital of Egypt.",
      "The Nile is a major river in Africa.",
      "Camels can go a long time without water.",
      "Papyrus was used as a writing material.",
      "Desert climates receive little rainfall.",
      "Giza lies on the west bank of the Nile.",
      "The Sphinx has the body of a lion.",
      "Pharaohs were rulers of ancient Egypt.",
      "Limestone is a sedimentary rock."};
  turn.gold_persona_index = 0;
  turn.gold_knowledge_index = 0;
  return turn;
}

DialogueTurn hike_turn() {
  DialogueTurn turn;
  turn.turn_id = "hike";
  turn.dialogue_text = "where to go for a hike?";
  turn.persona_candidates = {"I like mountains,", "I like rock music,", "I don't like pizza,",
                             "I don't like scary movies,"};
  turn.knowledge_candidates = {"Mount Rainier has many trails for hiking."};
  turn.gold_persona_index = 0;
  turn.gold_knowledge_index = 0;
  return turn;
}

Corpus planted_corpus(std::size_t turns, std::uint64_t seed, std::size_t personas,
                      std::size_t knowledge) {
  std::mt19937_64 rng(seed);
  Corpus corpus;
  corpus.split_name = "test";
  for (std::size_t t = 0; t < turns; ++t) {
    DialogueTurn turn;
    turn.turn_id = "planted-" + std::to_string(t);
    const std::string topic = kTopics[t % std::size(kTopics)];
    const std::string qa = "q" + std::to_string(t) + "a";
    const std::string qb = "q" + std::to_string(t) + "b";
    turn.dialogue_text = "what about " + qa + " " + qb + "?";
    const std::size_t gold_p = std::uniform_int_distribution<std::size_t>(0, personas - 1)(rng);
    const std::size_t gold_k = std::uniform_int_distribution<std::size_t>(0, knowledge - 1)(rng);
    for (std::size_t i = 0; i < personas; ++i) {
      turn.persona_candidates.push_back("I like p" + std::to_string(t) + "x" + std::to_string(i) +
                                        " p" + std::to_string(t) + "y" + std::to_string(i) + ".");
    }
    for (std::size_t j = 0; j < knowledge; ++j) {
      if (j == gold_k) {
        const std::string p = std::to_string(t);
        const std::string g = std::to_string(gold_p);
        turn.knowledge_candidates.push_back("The p" + p + "x" + g + " p" + p + "y" + g + " " + qa +
                                            " " + qb + " " + topic + ".");
      } else {
        turn.knowledge_candidates.push_back("k" + std::to_string(t) + "n" + std::to_string(j) +
                                            " filler" + std::to_string(j) + " " + qa + ".");
      }
    }
    turn.gold_persona_index = gold_p;
    turn.gold_knowledge_index = gold_k;
    corpus.turns.push_back(std::move(turn));
  }
  return corpus;
}

Corpus adversarial_corpus(std::size_t turns, std::uint64_t seed) {
  Corpus corpus = planted_corpus(turns, seed);
  for (auto& turn : corpus.turns) {
    // Relabel gold knowledge to a fixed index that the overlap never favors.
    const std::size_t favored = *turn.gold_knowledge_index;
    turn.gold_knowledge_index = favored == 0 ? 1 : 0;
  }
  return corpus;
}

bool verify_planted(const Corpus& corpus) {
  for (const auto& turn : corpus.turns) {
    const auto n = turn.persona_count();
    const auto m = turn.knowledge_count();
    const auto gp = *turn.gold_persona_index;
    const auto gk = *turn.gold_knowledge_index;
    const double best =
        jaccard_oracle(turn.persona_candidates[gp] + " " + turn.dialogue_text,
                       turn.knowledge_candidates[gk]);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i == gp && j == gk) continue;
        const double s = jaccard_oracle(turn.persona_candidates[i] + " " + turn.dialogue_text,
                                        turn.knowledge_candidates[j]);
        if (!(s < best)) return false;
      }
    }
    const double null_score = jaccard_oracle(turn.dialogue_text, turn.knowledge_candidates[gk]);
    if (!(null_score < best)) return false;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == gp) continue;
      const double neg = jaccard_oracle(turn.persona_candidates[i] + " " + turn.dialogue_text,
                                        turn.knowledge_candidates[gk]);
      if (!(neg < null_score)) return false;
    }
  }
  return true;
}

}  // namespace groundrank::testing
