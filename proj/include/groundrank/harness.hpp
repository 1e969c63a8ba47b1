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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "groundrank/corpus.hpp"
#include "groundrank/nrt.hpp"
#include "groundrank/retrieval.hpp"
#include "groundrank/scorer.hpp"

namespace groundrank {

struct SweepGrid {
  double start = 0.0;
  double stop = 1.0;
  double step = 0.05;
};

struct RunConfig {
  std::filesystem::path corpus_path;
  CorpusFormat corpus_format = CorpusFormat::kCanonical;
  LoadOptions load;
  ScorerConfig knowledge_scorer;
  ScorerConfig persona_scorer;
  double threshold = 0.5;
  KnowledgePolicy knowledge_policy = KnowledgePolicy::kPredicted;
  std::filesystem::path output_dir = "out";
  std::optional<SweepGrid> sweep;
  std::optional<std::map<int, double>> nrt_weights;
  AccuracyOptions accuracy;
  std::size_t threads = 1;
  // Report files for `compare`.
  std::optional<std::filesystem::path> baseline_report;
  std::optional<std::filesystem::path> candidate_report;
};

// Parses the INI-style run configuration. Relative paths resolve against
// `base_dir`. Unknown sections or keys are rejected.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// "-1:1, 0:1, 2:0.5" -> {{-1, 1}, {0, 1}, {2, 0.5}}
std::map<int, double> parse_weight_table(std::string_view text);

// Throws DataError on inconsistent settings.
void validate(const RunConfig& config);

// Grid points start, start + step, ... up to stop (inclusive, with a
// relative tolerance for accumulated rounding).
std::vector<double> sweep_thresholds(const SweepGrid& grid);

// Runs fn(i) for i in [0, count) on up to `threads` workers. If any call
// throws, the exception of the smallest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct ScoreSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct KnowledgeEvalReport {
  double accuracy = 0.0;
  std::vector<RetrievalResult> predictions;
};

struct PersonaEvalReport {
  double persona_accuracy = 0.0;
  std::optional<double> knowledge_accuracy;  // absent under the gold policy
  std::vector<RetrievalResult> predictions;
  ScoreSummary all_scores;
  ScoreSummary gold_scores;  // scores of gold personas only
};

struct NrtRunReport {
  NrtReport report;
  std::vector<NrtInstance> instances;
};

struct SweepPoint {
  double threshold = 0.0;
  double persona_accuracy = 0.0;

  bool operator==(const SweepPoint&) const = default;
};

// In-memory evaluations over an already loaded corpus and scorers.
KnowledgeEvalReport evaluate_knowledge(const Corpus& corpus, const Scorer& scorer,
                                       std::size_t threads = 1);

PersonaEvalReport evaluate_persona(const Corpus& corpus, const Scorer& knowledge_scorer,
                                   const Scorer& persona_scorer, double threshold,
                                   KnowledgePolicy policy, const AccuracyOptions& options = {},
                                   std::size_t threads = 1);

// The null-positive test ranks with the persona scorer against the
// knowledge chosen by `policy`.
NrtRunReport evaluate_nrt(const Corpus& corpus, const Scorer& knowledge_scorer,
                          const Scorer& persona_scorer, KnowledgePolicy policy,
                          const std::map<int, double>* weights = nullptr,
                          std::size_t threads = 1);

// Persona scores are computed once; each threshold only re-runs selection.
std::vector<SweepPoint> evaluate_sweep(const Corpus& corpus, const Scorer& knowledge_scorer,
                                       const Scorer& persona_scorer, KnowledgePolicy policy,
                                       const SweepGrid& grid, const AccuracyOptions& options = {},
                                       std::size_t threads = 1);

std::vector<RankDelta> compare_models(const NrtReport& baseline, const NrtReport& candidate);

// Config-driven runs: load the corpus, build and health-check the scorers,
// evaluate, and write the per-turn records plus a summary to output_dir.
KnowledgeEvalReport run_knowledge_eval(const RunConfig& config);
PersonaEvalReport run_persona_eval(const RunConfig& config);
NrtRunReport run_nrt(const RunConfig& config);
std::vector<SweepPoint> run_threshold_sweep(const RunConfig& config);
std::vector<RankDelta> run_compare(const RunConfig& config);
std::size_t run_export_finetune(const RunConfig& config);

}  // namespace groundrank
