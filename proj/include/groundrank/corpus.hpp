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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace groundrank {

struct DialogueTurn {
  std::string turn_id;
  std::string dialogue_text;
  std::vector<std::string> persona_candidates;
  std::vector<std::string> knowledge_candidates;
  std::optional<std::size_t> gold_persona_index;
  std::optional<std::size_t> gold_knowledge_index;

  std::size_t persona_count() const { return persona_candidates.size(); }
  std::size_t knowledge_count() const { return knowledge_candidates.size(); }

  bool operator==(const DialogueTurn&) const = default;
};

struct Corpus {
  std::string split_name = "custom";
  std::vector<DialogueTurn> turns;

  bool operator==(const Corpus&) const = default;
};

enum class CorpusFormat { kCanonical, kFocusRaw };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format);

struct LoadOptions {
  std::string split_name = "custom";
  // Number of trailing utterances joined into dialogue_text (focus_raw only).
  std::size_t window = 1;
  // Restrict the window to user-side utterances (focus_raw only).
  bool user_only = false;
};

// Trims outer whitespace and collapses inner whitespace runs to one space.
std::string normalize_text(std::string_view text);

// Empty result iff every DialogueTurn invariant holds. Each entry names the
// offending field, e.g. "persona_candidates[3]: empty".
std::vector<std::string> validate_turn(const DialogueTurn& turn);

// Throws DataError naming the line/record on parse failure and listing the
// violating turn_ids on validation failure (including duplicate ids).
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const LoadOptions& options = {});

Corpus parse_canonical(std::string_view text, const LoadOptions& options = {});
Corpus parse_focus_raw(std::string_view text, const LoadOptions& options = {});

std::string to_canonical(const Corpus& corpus);
void write_canonical(const Corpus& corpus, const std::filesystem::path& path);

// Throws DataError naming the turn when gold_knowledge_index is absent.
std::size_t require_gold_knowledge(const DialogueTurn& turn);

}  // namespace groundrank
