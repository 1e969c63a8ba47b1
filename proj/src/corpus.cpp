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

#include "groundrank/corpus.hpp"

#include <fmt/format.h>

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "groundrank/error.hpp"
#include "json.hpp"

namespace groundrank {

namespace {

using nlohmann::json;

constexpr std::size_t kFocusPersonaCount = 5;
constexpr std::size_t kFocusKnowledgeCount = 10;

const std::set<std::string>& canonical_keys() {
  static const std::set<std::string> keys = {
      "turn_id",        "dialogue_text",        "persona_candidates",
      "knowledge_candidates", "gold_persona_index", "gold_knowledge_index"};
  return keys;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open corpus file '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> string_list(const json& value, std::string_view field,
                                     std::string_view where) {
  if (!value.is_array())
    throw DataError(fmt::format("{}: '{}' must be an array of strings", where, field));
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string())
      throw DataError(fmt::format("{}: '{}' must contain only strings", where, field));
    out.push_back(normalize_text(item.get<std::string>()));
  }
  return out;
}

std::optional<std::size_t> optional_index(const json& value, std::string_view field,
                                          std::string_view where) {
  if (value.is_null()) return std::nullopt;
  if (value.is_number_unsigned()) return value.get<std::size_t>();
  throw DataError(
      fmt::format("{}: '{}' must be a non-negative integer or null", where, field));
}

// Throws when any turn violates an invariant or when ids repeat.
void validate_corpus(const Corpus& corpus) {
  std::vector<std::string> problems;
  std::unordered_set<std::string> seen;
  for (const auto& turn : corpus.turns) {
    auto violations = validate_turn(turn);
    if (!seen.insert(turn.turn_id).second) violations.push_back("turn_id: duplicate");
    if (violations.empty()) continue;
    std::string joined;
    for (const auto& v : violations) {
      if (!joined.empty()) joined += ", ";
      joined += v;
    }
    problems.push_back(fmt::format("{} ({})", turn.turn_id, joined));
  }
  if (problems.empty()) return;
  std::string message = "corpus validation failed for turn(s): ";
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (i) message += "; ";
    message += problems[i];
  }
  throw DataError(message);
}

// FoCus stores one "dialogueN" key per utterance entry; the suffix varies.
const json* find_dialogue(const json& entry) {
  for (auto it = entry.begin(); it != entry.end(); ++it) {
    if (it.key().rfind("dialogue", 0) == 0 && it.value().is_array()) return &it.value();
  }
  return nullptr;
}

std::string window_text(const std::vector<std::string>& utterances,
                        const LoadOptions& options) {
  // Utterances alternate user/machine starting with the user. Drop a
  // trailing machine reply so the window ends on the user's utterance.
  std::size_t end = utterances.size();
  if (end % 2 == 0 && end > 0) --end;
  std::vector<std::string> history;
  for (std::size_t i = 0; i < end; ++i) {
    if (options.user_only && i % 2 == 1) continue;
    history.push_back(utterances[i]);
  }
  const std::size_t k = std::max<std::size_t>(options.window, 1);
  const std::size_t first = history.size() > k ? history.size() - k : 0;
  std::string text;
  for (std::size_t i = first; i < history.size(); ++i) {
    if (!text.empty()) text += ' ';
    text += history[i];
  }
  return normalize_text(text);
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "canonical") return CorpusFormat::kCanonical;
  if (name == "focus_raw") return CorpusFormat::kFocusRaw;
  throw DataError(fmt::format("unknown corpus format '{}'", name));
}

std::string_view to_string(CorpusFormat format) {
  return format == CorpusFormat::kCanonical ? "canonical" : "focus_raw";
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::vector<std::string> validate_turn(const DialogueTurn& turn) {
  std::vector<std::string> violations;
  auto blank = [](const std::string& s) { return normalize_text(s).empty(); };
  if (blank(turn.turn_id)) violations.emplace_back("turn_id: empty");
  if (blank(turn.dialogue_text)) violations.emplace_back("dialogue_text: empty");
  if (turn.persona_candidates.empty()) violations.emplace_back("persona_candidates: no candidates");
  if (turn.knowledge_candidates.empty())
    violations.emplace_back("knowledge_candidates: no candidates");
  for (std::size_t i = 0; i < turn.persona_candidates.size(); ++i) {
    if (blank(turn.persona_candidates[i]))
      violations.push_back(fmt::format("persona_candidates[{}]: empty", i));
  }
  for (std::size_t j = 0; j < turn.knowledge_candidates.size(); ++j) {
    if (blank(turn.knowledge_candidates[j]))
      violations.push_back(fmt::format("knowledge_candidates[{}]: empty", j));
  }
  if (turn.gold_persona_index && *turn.gold_persona_index >= turn.persona_count())
    violations.emplace_back("gold_persona_index: out of range");
  if (turn.gold_knowledge_index && *turn.gold_knowledge_index >= turn.knowledge_count())
    violations.emplace_back("gold_knowledge_index: out of range");
  return violations;
}

Corpus parse_canonical(std::string_view text, const LoadOptions& options) {
  Corpus corpus;
  corpus.split_name = options.split_name;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (normalize_text(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = fmt::format("line {}", line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(fmt::format("{}: invalid JSON: {}", where, e.what()));
    }
    if (!record.is_object()) throw DataError(where + ": record must be a JSON object");
    for (auto it = record.begin(); it != record.end(); ++it) {
      if (!canonical_keys().count(it.key()))
        throw DataError(fmt::format("{}: unknown key '{}'", where, it.key()));
    }
    for (const auto& key : canonical_keys()) {
      if (!record.contains(key))
        throw DataError(fmt::format("{}: missing key '{}'", where, key));
    }
    if (!record["turn_id"].is_string() || !record["dialogue_text"].is_string())
      throw DataError(where + ": 'turn_id' and 'dialogue_text' must be strings");

    DialogueTurn turn;
    turn.turn_id = normalize_text(record["turn_id"].get<std::string>());
    turn.dialogue_text = normalize_text(record["dialogue_text"].get<std::string>());
    turn.persona_candidates = string_list(record["persona_candidates"], "persona_candidates", where);
    turn.knowledge_candidates =
        string_list(record["knowledge_candidates"], "knowledge_candidates", where);
    turn.gold_persona_index =
        optional_index(record["gold_persona_index"], "gold_persona_index", where);
    turn.gold_knowledge_index =
        optional_index(record["gold_knowledge_index"], "gold_knowledge_index", where);
    corpus.turns.push_back(std::move(turn));
    if (end == text.size()) break;
  }
  validate_corpus(corpus);
  return corpus;
}

Corpus parse_focus_raw(std::string_view text, const LoadOptions& options) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("focus_raw: invalid JSON: {}", e.what()));
  }
  const json* dialogs = &root;
  if (root.is_object()) {
    if (!root.contains("data")) throw DataError("focus_raw: missing top-level 'data' array");
    dialogs = &root["data"];
  }
  if (!dialogs->is_array()) throw DataError("focus_raw: 'data' must be an array");

  Corpus corpus;
  corpus.split_name = options.split_name;
  for (std::size_t d = 0; d < dialogs->size(); ++d) {
    const json& dialog = (*dialogs)[d];
    const std::string where = fmt::format("record {}", d);
    if (!dialog.is_object()) throw DataError(where + ": dialog must be an object");
    const std::string dialog_id = dialog.contains("dialogID") && dialog["dialogID"].is_string()
                                      ? dialog["dialogID"].get<std::string>()
                                      : fmt::format("dialog{}", d);
    if (!dialog.contains("utterance") || !dialog["utterance"].is_array())
      throw DataError(where + ": missing 'utterance' array");

    const json& utterances = dialog["utterance"];
    for (std::size_t u = 0; u < utterances.size(); ++u) {
      const json& entry = utterances[u];
      const std::string entry_where = fmt::format("{} utterance {}", where, u);
      if (!entry.is_object()) throw DataError(entry_where + ": must be an object");
      // Only entries carrying knowledge candidates and an answer are machine-answerable.
      if (!entry.contains("knowledge_candidates") || !entry.contains("knowledge_answer_index"))
        continue;
      const json* dialogue = find_dialogue(entry);
      if (!dialogue) throw DataError(entry_where + ": missing 'dialogueN' array");

      DialogueTurn turn;
      turn.turn_id = fmt::format("{}_{}", dialog_id, u + 1);
      turn.dialogue_text = window_text(string_list(*dialogue, "dialogue", entry_where), options);

      if (entry.contains("persona_candidate")) {
        turn.persona_candidates = string_list(entry["persona_candidate"], "persona_candidate", entry_where);
      } else if (dialog.contains("persona")) {
        turn.persona_candidates = string_list(dialog["persona"], "persona", where);
      } else {
        throw DataError(entry_where + ": no persona candidates");
      }
      turn.knowledge_candidates =
          string_list(entry["knowledge_candidates"], "knowledge_candidates", entry_where);
      turn.gold_knowledge_index = optional_index(entry["knowledge_answer_index"],
                                                 "knowledge_answer_index", entry_where);

      if (entry.contains("persona_grounding")) {
        const json& grounding = entry["persona_grounding"];
        if (!grounding.is_array())
          throw DataError(entry_where + ": 'persona_grounding' must be an array");
        for (std::size_t i = 0; i < grounding.size(); ++i) {
          const bool on = grounding[i].is_boolean() ? grounding[i].get<bool>()
                          : grounding[i].is_number() ? grounding[i].get<double>() != 0.0
                                                     : false;
          if (on) {
            turn.gold_persona_index = i;
            break;
          }
        }
      }

      if (turn.persona_count() != kFocusPersonaCount ||
          turn.knowledge_count() != kFocusKnowledgeCount) {
        throw DataError(fmt::format(
            "{}: expected {} persona and {} knowledge candidates, found {} and {} (turn {})",
            entry_where, kFocusPersonaCount, kFocusKnowledgeCount, turn.persona_count(),
            turn.knowledge_count(), turn.turn_id));
      }
      corpus.turns.push_back(std::move(turn));
    }
  }
  validate_corpus(corpus);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const LoadOptions& options) {
  const std::string text = read_file(path);
  return format == CorpusFormat::kCanonical ? parse_canonical(text, options)
                                            : parse_focus_raw(text, options);
}

std::string to_canonical(const Corpus& corpus) {
  std::string out;
  for (const auto& turn : corpus.turns) {
    nlohmann::ordered_json record;
    record["turn_id"] = turn.turn_id;
    record["dialogue_text"] = turn.dialogue_text;
    record["persona_candidates"] = turn.persona_candidates;
    record["knowledge_candidates"] = turn.knowledge_candidates;
    record["gold_persona_index"] =
        turn.gold_persona_index ? nlohmann::ordered_json(*turn.gold_persona_index) : nullptr;
    record["gold_knowledge_index"] =
        turn.gold_knowledge_index ? nlohmann::ordered_json(*turn.gold_knowledge_index) : nullptr;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_canonical(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write corpus file '{}'", path.string()));
  out << to_canonical(corpus);
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

std::size_t require_gold_knowledge(const DialogueTurn& turn) {
  if (!turn.gold_knowledge_index)
    throw DataError(fmt::format("turn {}: gold_knowledge_index is required", turn.turn_id));
  return *turn.gold_knowledge_index;
}

}  // namespace groundrank
