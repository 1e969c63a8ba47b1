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

#pragma once

// Test-only fixtures and oracles. Nothing here calls into the code paths it
// is used to check (the Jaccard oracle has its own tokenizer, the argmax
// oracle uses std::max_element over a flattened copy).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "groundrank/corpus.hpp"
#include "groundrank/scorer.hpp"

namespace groundrank::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Scores each pair with an arbitrary function; counts pairs scored.
class FunctionScorer final : public Scorer {
 public:
  using Fn = std::function<double(const QueryAnswer&)>;
  explicit FunctionScorer(Fn fn) : fn_(std::move(fn)) {}

  std::size_t pairs_scored() const { return pairs_scored_; }
  std::size_t calls() const { return calls_; }

 private:
  std::vector<double> do_score(std::span<const QueryAnswer> pairs) const override {
    ++calls_;
    pairs_scored_ += pairs.size();
    std::vector<double> out;
    for (const auto& p : pairs) out.push_back(fn_(p));
    return out;
  }

  Fn fn_;
  mutable std::size_t pairs_scored_ = 0;
  mutable std::size_t calls_ = 0;
};

// Looks scores up by exact (query, answer); unknown pairs score `fallback`.
class TableScorer final : public Scorer {
 public:
  void set(const std::string& query, const std::string& answer, double score) {
    table_[{query, answer}] = score;
  }

 private:
  std::vector<double> do_score(std::span<const QueryAnswer> pairs) const override {
    std::vector<double> out;
    for (const auto& p : pairs) {
      const auto it = table_.find({p.query, p.answer});
      out.push_back(it == table_.end() ? fallback_ : it->second);
    }
    return out;
  }

  std::map<std::pair<std::string, std::string>, double> table_;
  double fallback_ = -1.0;
};

// Independent Jaccard: regex tokenization into std::set.
double jaccard_oracle(const std::string& a, const std::string& b);

// First maximum of a row-major flattened grid: (row, col).
std::pair<std::size_t, std::size_t> brute_force_argmax(const std::vector<double>& flat,
                                                       std::size_t cols);

// Turn from the QA prompt sample: persona/dialogue/knowledge of the
// Seven Wonders example, with gold persona 0 and gold knowledge 0.
DialogueTurn seven_wonders_turn();

// Turn for the ranking sample: 1 positive persona (index 0) and 3 negatives.
DialogueTurn hike_turn();

// Corpus where lexical Jaccard uniquely favors (gold persona + dialogue,
// gold knowledge) and, against the gold knowledge, ranks the positive query
// above the bare dialogue above every negative query.
Corpus planted_corpus(std::size_t turns, std::uint64_t seed, std::size_t personas = 5,
                      std::size_t knowledge = 10);

// Same texts, but the lexically favored knowledge is never the labelled gold.
Corpus adversarial_corpus(std::size_t turns, std::uint64_t seed);

// True when every turn of `corpus` satisfies the planted property under the
// Jaccard oracle (unique grid argmax at the golds; pos > null > neg).
bool verify_planted(const Corpus& corpus);

}  // namespace groundrank::testing
