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

#include "groundrank/nrt.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "groundrank/error.hpp"
#include "groundrank/retrieval.hpp"

namespace groundrank {

namespace {

bool is_null(const NrtEntry& e) { return e.kind == EntryKind::kNullPositive; }

}  // namespace

std::string_view to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::kPositive: return "positive";
    case EntryKind::kNegative: return "negative";
    case EntryKind::kNullPositive: return "null_positive";
  }
  return "negative";
}

EntryKind parse_entry_kind(std::string_view name) {
  if (name == "positive") return EntryKind::kPositive;
  if (name == "negative") return EntryKind::kNegative;
  if (name == "null_positive") return EntryKind::kNullPositive;
  throw DataError(fmt::format("unknown entry kind '{}'", name));
}

std::size_t RankHistogram::count(int r) const {
  const auto it = counts.find(r);
  return it == counts.end() ? 0 : it->second;
}

std::size_t RankHistogram::total() const {
  std::size_t sum = 0;
  for (const auto& [r, n] : counts) sum += n;
  return sum;
}

void rank_entries(std::vector<NrtEntry>& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const NrtEntry& a, const NrtEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (is_null(a) != is_null(b)) return !is_null(a);
    return a.source_index.value_or(0) < b.source_index.value_or(0);
  });
}

int adjusted_rank(std::span<const NrtEntry> ordered) {
  const auto nulls = std::count_if(ordered.begin(), ordered.end(), is_null);
  if (nulls != 1)
    throw DataError(fmt::format("adjusted_rank: expected one null-positive entry, found {}", nulls));
  const auto null_at = std::find_if(ordered.begin(), ordered.end(), is_null);
  const auto negatives_above = std::count_if(ordered.begin(), null_at, [](const NrtEntry& e) {
    return e.kind == EntryKind::kNegative;
  });
  const auto positives_below = std::count_if(null_at + 1, ordered.end(), [](const NrtEntry& e) {
    return e.kind == EntryKind::kPositive;
  });
  return static_cast<int>(negatives_above - positives_below);
}

NrtInstance build_nrt_instance(const DialogueTurn& turn, std::size_t knowledge_index,
                               const Scorer& scorer) {
  const auto persona_pairs = build_persona_inputs(turn, knowledge_index);
  std::vector<QueryAnswer> texts;
  texts.reserve(persona_pairs.size() + 1);
  for (const auto& p : persona_pairs) texts.push_back(p.text);
  texts.push_back({normalize_text(turn.dialogue_text), turn.knowledge_candidates[knowledge_index]});

  std::vector<double> scores;
  try {
    scores = scorer.score(texts);
  } catch (const ScorerError& e) {
    throw ScorerError(fmt::format("turn {}: {}", turn.turn_id, e.what()), e.retryable(),
                      e.attempts());
  }

  NrtInstance instance;
  instance.turn_id = turn.turn_id;
  instance.entries.reserve(texts.size());
  for (std::size_t i = 0; i < persona_pairs.size(); ++i) {
    const EntryKind kind =
        turn.gold_persona_index == i ? EntryKind::kPositive : EntryKind::kNegative;
    instance.entries.push_back({kind, i, scores[i]});
  }
  instance.entries.push_back({EntryKind::kNullPositive, std::nullopt, scores.back()});
  rank_entries(instance.entries);
  instance.adjusted_rank = adjusted_rank(instance.entries);
  return instance;
}

RankHistogram rank_histogram(std::span<const NrtInstance> instances, std::size_t n_pos_max,
                             std::size_t n_neg_max) {
  if (instances.empty()) throw DataError("rank_histogram: no instances");
  RankHistogram hist;
  hist.r_min = -static_cast<int>(n_pos_max);
  hist.r_max = static_cast<int>(n_neg_max);
  for (const auto& instance : instances) {
    const int r = instance.adjusted_rank;
    if (r < hist.r_min || r > hist.r_max) {
      throw DataError(fmt::format("rank_histogram: turn {} has rank {} outside [{}, {}]",
                                  instance.turn_id, r, hist.r_min, hist.r_max));
    }
    ++hist.counts[r];
  }
  return hist;
}

std::pair<std::size_t, std::size_t> rank_bounds(const Corpus& corpus) {
  std::size_t pos_max = 0;
  std::size_t neg_max = 0;
  for (const auto& turn : corpus.turns) {
    const std::size_t positives = turn.gold_persona_index ? 1 : 0;
    pos_max = std::max(pos_max, positives);
    neg_max = std::max(neg_max, turn.persona_count() - positives);
  }
  return {pos_max, neg_max};
}

double non_triviality(const RankHistogram& hist, NtVariant variant,
                      const std::map<int, double>* weights) {
  int lo = hist.r_min;
  int hi = hist.r_max;
  if (variant == NtVariant::kPositive) lo = std::max(lo, 0);
  if (variant == NtVariant::kNegative) hi = std::min(hi, 0);
  if (variant == NtVariant::kWeighted && !weights)
    throw DataError("non_triviality: weighted variant requires weights");

  double numerator = 0.0;
  double denominator = 0.0;
  for (int r = lo; r <= hi; ++r) {
    double w = 1.0;
    if (variant == NtVariant::kWeighted) {
      const auto it = weights->find(r);
      if (it == weights->end())
        throw DataError(fmt::format("non_triviality: no weight for rank {}", r));
      w = it->second;
    }
    const auto n = static_cast<double>(hist.count(r));
    const double distance = variant == NtVariant::kSquared ? static_cast<double>(r) * r
                                                           : static_cast<double>(std::abs(r));
    numerator += w * n * distance;
    denominator += w * n;
  }
  if (!(denominator > 0.0))
    throw DataError(fmt::format("non_triviality: no mass in rank range [{}, {}]", lo, hi));
  return numerator / denominator;
}

double zero_threshold_accuracy(std::span<const NrtInstance> instances, const Corpus& corpus) {
  std::unordered_map<std::string, const NrtInstance*> by_id;
  for (const auto& instance : instances) by_id.emplace(instance.turn_id, &instance);
  if (by_id.size() != instances.size() || instances.size() != corpus.turns.size())
    throw DataError("zero_threshold_accuracy: instances do not cover the corpus turns");

  std::size_t correct = 0;
  std::size_t counted = 0;
  for (const auto& turn : corpus.turns) {
    const auto it = by_id.find(turn.turn_id);
    if (it == by_id.end())
      throw DataError(fmt::format("zero_threshold_accuracy: no instance for turn {}", turn.turn_id));
    if (!turn.gold_persona_index) continue;
    ++counted;
    const auto& entries = it->second->entries;
    const auto top = std::find_if(entries.begin(), entries.end(),
                                  [](const NrtEntry& e) { return !is_null(e); });
    if (top != entries.end() && top->source_index == turn.gold_persona_index) ++correct;
  }
  if (counted == 0) throw DataError("zero_threshold_accuracy: no turns with a gold persona");
  return static_cast<double>(correct) / static_cast<double>(counted);
}

std::vector<RankDelta> rank_delta_analysis(const RankHistogram& baseline,
                                           const RankHistogram& candidate) {
  if (baseline.r_min != candidate.r_min || baseline.r_max != candidate.r_max) {
    throw DataError(fmt::format("rank_delta_analysis: ranges differ ([{}, {}] vs [{}, {}])",
                                baseline.r_min, baseline.r_max, candidate.r_min,
                                candidate.r_max));
  }
  std::vector<RankDelta> rows;
  for (int r = baseline.r_min; r <= baseline.r_max; ++r) {
    const auto base = static_cast<long long>(baseline.count(r));
    const auto cand = static_cast<long long>(candidate.count(r));
    RankDelta row{r, cand - base, std::nullopt};
    if (base != 0) row.ratio_percent = 100.0 * static_cast<double>(row.delta) / static_cast<double>(base);
    rows.push_back(row);
  }
  return rows;
}

std::map<int, double> uniform_weights(int r_min, int r_max) {
  std::map<int, double> weights;
  for (int r = r_min; r <= r_max; ++r) weights[r] = 1.0;
  return weights;
}

NrtReport make_nrt_report(std::span<const NrtInstance> instances, const Corpus& corpus,
                          const std::map<int, double>* weights) {
  const auto [pos_max, neg_max] = rank_bounds(corpus);
  NrtReport report;
  report.histogram = rank_histogram(instances, pos_max, neg_max);

  auto defined = [&](NtVariant v, const std::map<int, double>* w) -> std::optional<double> {
    try {
      return non_triviality(report.histogram, v, w);
    } catch (const DataError&) {
      return std::nullopt;
    }
  };
  report.nt = non_triviality(report.histogram, NtVariant::kBase);
  report.nt_sq = defined(NtVariant::kSquared, nullptr);
  report.nt_pos = defined(NtVariant::kPositive, nullptr);
  report.nt_neg = defined(NtVariant::kNegative, nullptr);
  const auto uniform = uniform_weights(report.histogram.r_min, report.histogram.r_max);
  if (weights) {
    for (int r = report.histogram.r_min; r <= report.histogram.r_max; ++r) {
      if (!weights->count(r)) throw DataError(fmt::format("nrt weights: no weight for rank {}", r));
    }
  }
  report.nt_weighted = defined(NtVariant::kWeighted, weights ? weights : &uniform);

  bool any_gold = std::any_of(corpus.turns.begin(), corpus.turns.end(),
                              [](const DialogueTurn& t) { return t.gold_persona_index.has_value(); });
  if (any_gold) report.zero_acc = zero_threshold_accuracy(instances, corpus);
  return report;
}

}  // namespace groundrank
