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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "groundrank/corpus.hpp"
#include "groundrank/scorer.hpp"

namespace groundrank {

enum class EntryKind { kPositive, kNegative, kNullPositive };

std::string_view to_string(EntryKind kind);
EntryKind parse_entry_kind(std::string_view name);

struct NrtEntry {
  EntryKind kind = EntryKind::kNegative;
  std::optional<std::size_t> source_index;  // persona index; absent for the bare dialogue
  double score = 0.0;

  bool operator==(const NrtEntry&) const = default;
};

// One turn of the null-positive rank test. `entries` is in ranked order.
struct NrtInstance {
  std::string turn_id;
  std::vector<NrtEntry> entries;
  int adjusted_rank = 0;

  bool operator==(const NrtInstance&) const = default;
};

// Count of null-positive samples per adjusted rank, over [r_min, r_max].
// Ranks with no instances have no key.
struct RankHistogram {
  std::map<int, std::size_t> counts;
  int r_min = 0;
  int r_max = 0;

  std::size_t count(int r) const;
  std::size_t total() const;

  bool operator==(const RankHistogram&) const = default;
};

enum class NtVariant { kBase, kSquared, kPositive, kNegative, kWeighted };

struct NrtReport {
  std::optional<double> zero_acc;  // absent when no turn has a gold persona
  double nt = 0.0;
  std::optional<double> nt_sq;
  std::optional<double> nt_pos;  // absent when no mass at r >= 0
  std::optional<double> nt_neg;  // absent when no mass at r <= 0
  std::optional<double> nt_weighted;
  RankHistogram histogram;
};

struct RankDelta {
  int rank = 0;
  long long delta = 0;
  std::optional<double> ratio_percent;  // absent when the baseline count is 0

  bool operator==(const RankDelta&) const = default;
};

// Sorts descending by score. On equal scores persona entries precede the
// null-positive entry, then smaller source_index first.
void rank_entries(std::vector<NrtEntry>& entries);

// (negatives ranked above the null-positive) - (positives ranked below it).
// Throws DataError unless exactly one null-positive entry is present.
int adjusted_rank(std::span<const NrtEntry> ordered);

// Scores the n persona-augmented queries and the bare dialogue against
// knowledge candidate `knowledge_index` in a single batch.
NrtInstance build_nrt_instance(const DialogueTurn& turn, std::size_t knowledge_index,
                               const Scorer& scorer);

RankHistogram rank_histogram(std::span<const NrtInstance> instances, std::size_t n_pos_max,
                             std::size_t n_neg_max);

// Rank range implied by a corpus: r_min = -(most positives in a turn),
// r_max = most negatives in a turn.
std::pair<std::size_t, std::size_t> rank_bounds(const Corpus& corpus);

// Throws DataError when the variant's summation range holds no mass or when
// weighted is requested without a weight for every rank in range.
double non_triviality(const RankHistogram& hist, NtVariant variant,
                      const std::map<int, double>* weights = nullptr);

// Top-1 persona accuracy ignoring the null-positive entry, over turns with a
// gold persona. Throws DataError when there are none.
double zero_threshold_accuracy(std::span<const NrtInstance> instances, const Corpus& corpus);

std::vector<RankDelta> rank_delta_analysis(const RankHistogram& baseline,
                                           const RankHistogram& candidate);

std::map<int, double> uniform_weights(int r_min, int r_max);

NrtReport make_nrt_report(std::span<const NrtInstance> instances, const Corpus& corpus,
                          const std::map<int, double>* weights = nullptr);

}  // namespace groundrank
