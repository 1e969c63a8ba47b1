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

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "groundrank/corpus.hpp"
#include "groundrank/scorer.hpp"

namespace groundrank {

template <typename Scalar>
using GridMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ScoreVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// n x m pair likelihoods for one turn: rows are persona candidates, columns
// knowledge candidates.
template <typename Scalar>
struct BasicScoreMatrix {
  std::string turn_id;
  GridMatrix<Scalar> values;
};

using ScoreMatrix = BasicScoreMatrix<double>;

struct GridCell {
  Eigen::Index row = 0;
  Eigen::Index col = 0;

  bool operator==(const GridCell&) const = default;
};

// Row-major argmax; ties go to the smallest (row, col). Eigen's maxCoeff
// walks storage order and does not guarantee this rule, so scan explicitly.
template <typename Derived>
GridCell grid_argmax(const Eigen::DenseBase<Derived>& values) {
  eigen_assert(values.size() > 0);
  GridCell best;
  auto best_value = values(0, 0);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (values(i, j) > best_value) {
        best_value = values(i, j);
        best = {i, j};
      }
    }
  }
  return best;
}

// Index of the first maximum of a score vector.
template <typename Derived>
Eigen::Index first_argmax(const Eigen::DenseBase<Derived>& values) {
  eigen_assert(values.size() > 0);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < values.size(); ++k) {
    if (values(k) > values(best)) best = k;
  }
  return best;
}

struct PromptPair {
  std::size_t persona_index = 0;
  std::size_t knowledge_index = 0;
  QueryAnswer text;
};

struct PromptGrid {
  std::string turn_id;
  std::size_t personas = 0;
  std::size_t knowledge = 0;
  std::vector<PromptPair> pairs;  // row-major, pairs[i * knowledge + j]

  const PromptPair& at(std::size_t i, std::size_t j) const { return pairs.at(i * knowledge + j); }
  std::vector<QueryAnswer> texts() const;
};

struct KnowledgeSelection {
  std::size_t best_persona = 0;
  std::size_t best_knowledge = 0;
  ScoreMatrix scores;
};

enum class KnowledgePolicy { kPredicted, kGold };

KnowledgePolicy parse_knowledge_policy(std::string_view name);
std::string_view to_string(KnowledgePolicy policy);

struct RetrievalResult {
  std::string turn_id;
  std::size_t predicted_knowledge_index = 0;
  std::optional<std::size_t> predicted_persona_index;
  std::vector<double> persona_scores;
  // Argmax persona of the knowledge grid. Kept for diagnostics only; it is
  // not the persona prediction. Absent under the gold knowledge policy.
  std::optional<std::size_t> best_persona_index;

  bool operator==(const RetrievalResult&) const = default;
};

// "{persona} {dialogue}". Throws DataError when either part is blank.
std::string augment_dialogue(std::string_view persona, std::string_view dialogue);

PromptGrid build_prompt_grid(const DialogueTurn& turn);

// Scores the full persona x knowledge grid and picks the best cell.
KnowledgeSelection retrieve_knowledge(const DialogueTurn& turn, const Scorer& scorer);

// One pair per persona, all sharing knowledge candidate `knowledge_index`.
std::vector<PromptPair> build_persona_inputs(const DialogueTurn& turn,
                                             std::size_t knowledge_index);

// Best-scoring candidate among those at or above `threshold`, or nullopt
// when every score falls below it.
std::optional<std::size_t> select_persona(std::span<const double> persona_scores,
                                          double threshold);

template <typename Derived>
std::optional<std::size_t> select_persona(const Eigen::DenseBase<Derived>& persona_scores,
                                          double threshold) {
  std::vector<double> copy(static_cast<std::size_t>(persona_scores.size()));
  for (Eigen::Index k = 0; k < persona_scores.size(); ++k)
    copy[static_cast<std::size_t>(k)] = static_cast<double>(persona_scores.derived()(k));
  return select_persona(std::span<const double>(copy), threshold);
}

// Persona scores for every candidate against one knowledge candidate.
std::vector<double> score_personas(const DialogueTurn& turn, std::size_t knowledge_index,
                                   const Scorer& scorer);

RetrievalResult retrieve_turn(const DialogueTurn& turn, const Scorer& knowledge_scorer,
                              const Scorer& persona_scorer, double threshold,
                              KnowledgePolicy policy);

struct FinetuneRecord {
  std::string query;
  std::string answer;
  int label = 0;

  bool operator==(const FinetuneRecord&) const = default;
};

// Persona-vs-gold-knowledge training pairs, n per turn.
std::vector<FinetuneRecord> finetune_records(const Corpus& corpus);
std::size_t export_finetune_data(const Corpus& corpus, const std::filesystem::path& out_path);
std::vector<FinetuneRecord> read_finetune_data(const std::filesystem::path& path);

enum class AccuracyTarget { kKnowledge, kPersona };

struct AccuracyOptions {
  // Drop turns without a gold persona from persona accuracy instead of
  // counting an abstention on them as correct.
  bool exclude_no_gold_persona = false;
};

double accuracy(std::span<const RetrievalResult> predictions, const Corpus& corpus,
                AccuracyTarget target, const AccuracyOptions& options = {});

}  // namespace groundrank
