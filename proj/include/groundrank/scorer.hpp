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

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace groundrank {

// One (query, answer) text pair as seen by a scorer.
struct QueryAnswer {
  std::string query;
  std::string answer;

  bool operator==(const QueryAnswer&) const = default;
};

enum class ScorerKind { kLexical, kRemote };

ScorerKind parse_scorer_kind(std::string_view name);
std::string_view to_string(ScorerKind kind);

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kLexical;
  std::optional<std::string> endpoint;   // remote only, e.g. "http://127.0.0.1:8000"
  std::optional<std::string> model_tag;  // remote only; selects the service-side model
  std::size_t batch_size = 64;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_in_flight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
};

// Throws DataError when the configuration is unusable (remote without
// endpoint, zero batch size, ...).
void validate(const ScorerConfig& config);

// Scores (query, answer) pairs; higher means a more likely pairing.
//
// score() checks the preconditions shared by every implementation (non-empty
// batch, non-empty strings) and the postconditions (one finite score per pair,
// in input order) around the implementation's do_score().
class Scorer {
 public:
  virtual ~Scorer() = default;

  std::vector<double> score(std::span<const QueryAnswer> pairs) const;

 private:
  virtual std::vector<double> do_score(std::span<const QueryAnswer> pairs) const = 0;
};

// Jaccard overlap of lowercased alphanumeric token sets. Pure and
// deterministic; used as the offline scorer and as a test oracle.
class LexicalScorer final : public Scorer {
 private:
  std::vector<double> do_score(std::span<const QueryAnswer> pairs) const override;
};

struct HealthStatus {
  bool ok = false;
  std::string detail;
};

// Client for the scorer service wire protocol (POST /score, GET /health).
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(ScorerConfig config);

  HealthStatus health() const;
  const ScorerConfig& config() const { return config_; }

 private:
  std::vector<double> do_score(std::span<const QueryAnswer> pairs) const override;
  std::vector<double> score_chunk(std::span<const QueryAnswer> chunk, std::size_t offset) const;

  ScorerConfig config_;
  std::string host_;
  std::string path_prefix_;
};

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config);

std::vector<double> score_batch(const ScorerConfig& config, std::span<const QueryAnswer> pairs);

// Sorted, de-duplicated tokens: maximal runs of alphanumeric characters,
// ASCII-lowercased. Bytes of multi-byte UTF-8 sequences count as letters.
std::vector<std::string> lexical_tokens(std::string_view text);

// Jaccard similarity of the two token sets; 0 when either set is empty.
double lexical_score(std::string_view query, std::string_view answer);

HealthStatus health_check(const ScorerConfig& config);

}  // namespace groundrank
