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

#include "groundrank/retrieval.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "groundrank/error.hpp"
#include "json.hpp"

namespace groundrank {

namespace {

std::string with_turn(const DialogueTurn& turn, const char* what) {
  return fmt::format("turn {}: {}", turn.turn_id, what);
}

// Rethrows scorer/data failures with the turn id prepended.
template <typename Fn>
auto in_turn_context(const DialogueTurn& turn, Fn&& fn) {
  try {
    return fn();
  } catch (const ScorerError& e) {
    throw ScorerError(with_turn(turn, e.what()), e.retryable(), e.attempts());
  } catch (const DataError& e) {
    throw DataError(with_turn(turn, e.what()));
  }
}

std::vector<QueryAnswer> texts_of(std::span<const PromptPair> pairs) {
  std::vector<QueryAnswer> texts;
  texts.reserve(pairs.size());
  for (const auto& p : pairs) texts.push_back(p.text);
  return texts;
}

}  // namespace

KnowledgePolicy parse_knowledge_policy(std::string_view name) {
  if (name == "predicted") return KnowledgePolicy::kPredicted;
  if (name == "gold") return KnowledgePolicy::kGold;
  throw DataError(fmt::format("unknown knowledge policy '{}'", name));
}

std::string_view to_string(KnowledgePolicy policy) {
  return policy == KnowledgePolicy::kPredicted ? "predicted" : "gold";
}

std::vector<QueryAnswer> PromptGrid::texts() const { return texts_of(pairs); }

std::string augment_dialogue(std::string_view persona, std::string_view dialogue) {
  const std::string d = normalize_text(dialogue);
  if (d.empty()) throw DataError("dialogue text is empty; persona-only queries are invalid");
  const std::string p = normalize_text(persona);
  if (p.empty()) throw DataError("persona text is empty");
  return p + ' ' + d;
}

PromptGrid build_prompt_grid(const DialogueTurn& turn) {
  return in_turn_context(turn, [&] {
    PromptGrid grid;
    grid.turn_id = turn.turn_id;
    grid.personas = turn.persona_count();
    grid.knowledge = turn.knowledge_count();
    grid.pairs.reserve(grid.personas * grid.knowledge);
    for (std::size_t i = 0; i < grid.personas; ++i) {
      const std::string query = augment_dialogue(turn.persona_candidates[i], turn.dialogue_text);
      for (std::size_t j = 0; j < grid.knowledge; ++j)
        grid.pairs.push_back({i, j, {query, turn.knowledge_candidates[j]}});
    }
    return grid;
  });
}

KnowledgeSelection retrieve_knowledge(const DialogueTurn& turn, const Scorer& scorer) {
  const PromptGrid grid = build_prompt_grid(turn);
  const auto texts = grid.texts();
  const auto flat = in_turn_context(turn, [&] { return scorer.score(texts); });

  KnowledgeSelection selection;
  selection.scores.turn_id = turn.turn_id;
  selection.scores.values = Eigen::Map<const GridMatrix<double>>(
      flat.data(), static_cast<Eigen::Index>(grid.personas),
      static_cast<Eigen::Index>(grid.knowledge));
  const GridCell best = grid_argmax(selection.scores.values);
  selection.best_persona = static_cast<std::size_t>(best.row);
  selection.best_knowledge = static_cast<std::size_t>(best.col);
  return selection;
}

std::vector<PromptPair> build_persona_inputs(const DialogueTurn& turn,
                                             std::size_t knowledge_index) {
  if (knowledge_index >= turn.knowledge_count()) {
    throw DataError(fmt::format("turn {}: knowledge index {} out of range (m = {})",
                                turn.turn_id, knowledge_index, turn.knowledge_count()));
  }
  return in_turn_context(turn, [&] {
    std::vector<PromptPair> pairs;
    pairs.reserve(turn.persona_count());
    for (std::size_t i = 0; i < turn.persona_count(); ++i) {
      pairs.push_back({i, knowledge_index,
                       {augment_dialogue(turn.persona_candidates[i], turn.dialogue_text),
                        turn.knowledge_candidates[knowledge_index]}});
    }
    return pairs;
  });
}

std::optional<std::size_t> select_persona(std::span<const double> persona_scores,
                                          double threshold) {
  if (persona_scores.empty()) throw DataError("select_persona: empty score list");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < persona_scores.size(); ++i) {
    if (!std::isfinite(persona_scores[i]))
      throw DataError(fmt::format("select_persona: non-finite score at {}", i));
    if (persona_scores[i] < threshold) continue;
    if (!best || persona_scores[i] > persona_scores[*best]) best = i;
  }
  return best;
}

std::vector<double> score_personas(const DialogueTurn& turn, std::size_t knowledge_index,
                                   const Scorer& scorer) {
  const auto texts = texts_of(build_persona_inputs(turn, knowledge_index));
  return in_turn_context(turn, [&] { return scorer.score(texts); });
}

RetrievalResult retrieve_turn(const DialogueTurn& turn, const Scorer& knowledge_scorer,
                              const Scorer& persona_scorer, double threshold,
                              KnowledgePolicy policy) {
  RetrievalResult result;
  result.turn_id = turn.turn_id;
  if (policy == KnowledgePolicy::kGold) {
    result.predicted_knowledge_index = require_gold_knowledge(turn);
  } else {
    const auto selection = retrieve_knowledge(turn, knowledge_scorer);
    result.predicted_knowledge_index = selection.best_knowledge;
    result.best_persona_index = selection.best_persona;
  }
  result.persona_scores = score_personas(turn, result.predicted_knowledge_index, persona_scorer);
  result.predicted_persona_index = select_persona(result.persona_scores, threshold);
  return result;
}

std::vector<FinetuneRecord> finetune_records(const Corpus& corpus) {
  std::vector<FinetuneRecord> records;
  for (const auto& turn : corpus.turns) {
    const std::size_t gold = require_gold_knowledge(turn);
    for (const auto& pair : build_persona_inputs(turn, gold)) {
      const int label = turn.gold_persona_index == pair.persona_index ? 1 : 0;
      records.push_back({pair.text.query, pair.text.answer, label});
    }
  }
  return records;
}

std::size_t export_finetune_data(const Corpus& corpus, const std::filesystem::path& out_path) {
  const auto records = finetune_records(corpus);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", out_path.string()));
  for (const auto& r : records) {
    nlohmann::ordered_json line;
    line["query"] = r.query;
    line["answer"] = r.answer;
    line["label"] = r.label;
    out << line.dump() << '\n';
  }
  out.flush();
  if (!out) throw DataError(fmt::format("write failed for '{}'", out_path.string()));
  return records.size();
}

std::vector<FinetuneRecord> read_finetune_data(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::vector<FinetuneRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_text(line).empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      if (!record.is_object() || record.size() != 3 || !record.at("query").is_string() ||
          !record.at("answer").is_string() || !record.at("label").is_number_integer())
        throw DataError("bad record");
      const int label = record["label"].get<int>();
      if (label != 0 && label != 1) throw DataError("bad label");
      records.push_back({record["query"].get<std::string>(), record["answer"].get<std::string>(),
                         label});
    } catch (const std::exception& e) {
      throw DataError(fmt::format("{}:{}: invalid fine-tune record ({})", path.string(), line_no,
                                  e.what()));
    }
  }
  return records;
}

double accuracy(std::span<const RetrievalResult> predictions, const Corpus& corpus,
                AccuracyTarget target, const AccuracyOptions& options) {
  if (predictions.size() != corpus.turns.size())
    throw DataError(fmt::format("accuracy: {} predictions for {} corpus turns",
                                predictions.size(), corpus.turns.size()));
  std::unordered_map<std::string, const RetrievalResult*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.turn_id, &p).second)
      throw DataError(fmt::format("accuracy: duplicate prediction for turn {}", p.turn_id));
  }
  std::size_t correct = 0;
  std::size_t counted = 0;
  for (const auto& turn : corpus.turns) {
    const auto it = by_id.find(turn.turn_id);
    if (it == by_id.end())
      throw DataError(fmt::format("accuracy: no prediction for turn {}", turn.turn_id));
    const RetrievalResult& p = *it->second;
    if (target == AccuracyTarget::kKnowledge) {
      ++counted;
      if (p.predicted_knowledge_index == require_gold_knowledge(turn)) ++correct;
    } else {
      if (!turn.gold_persona_index && options.exclude_no_gold_persona) continue;
      ++counted;
      if (p.predicted_persona_index == turn.gold_persona_index) ++correct;
    }
  }
  if (counted == 0) throw DataError("accuracy: no turns to evaluate");
  return static_cast<double>(correct) / static_cast<double>(counted);
}

}  // namespace groundrank
