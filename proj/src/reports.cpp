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

#include "groundrank/reports.hpp"

#include <fmt/format.h>

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "groundrank/error.hpp"

namespace groundrank {

namespace {

Json optional_number(const std::optional<double>& value) {
  return value ? Json(*value) : Json(nullptr);
}

std::optional<double> read_optional_number(const Json& object, const char* key) {
  const auto& value = object.at(key);
  if (value.is_null()) return std::nullopt;
  if (!value.is_number()) throw DataError(fmt::format("'{}' must be a number or null", key));
  return value.get<double>();
}

std::optional<std::size_t> read_optional_index(const Json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<std::size_t>();
}

template <typename Fn>
auto schema_guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw DataError(fmt::format("invalid {}: {}", what, e.what()));
  } catch (const std::invalid_argument& e) {
    throw DataError(fmt::format("invalid {}: {}", what, e.what()));
  } catch (const std::out_of_range& e) {
    throw DataError(fmt::format("invalid {}: {}", what, e.what()));
  }
}

}  // namespace

Json to_json(const RetrievalResult& result) {
  Json record;
  record["turn_id"] = result.turn_id;
  record["predicted_knowledge_index"] = result.predicted_knowledge_index;
  record["predicted_persona_index"] =
      result.predicted_persona_index ? Json(*result.predicted_persona_index) : Json(nullptr);
  record["persona_scores"] = result.persona_scores;
  record["best_i"] = result.best_persona_index ? Json(*result.best_persona_index) : Json(nullptr);
  return record;
}

RetrievalResult retrieval_result_from_json(const Json& record) {
  return schema_guard("prediction record", [&] {
    RetrievalResult result;
    result.turn_id = record.at("turn_id").get<std::string>();
    result.predicted_knowledge_index = record.at("predicted_knowledge_index").get<std::size_t>();
    result.predicted_persona_index = read_optional_index(record.at("predicted_persona_index"));
    result.persona_scores = record.at("persona_scores").get<std::vector<double>>();
    result.best_persona_index = read_optional_index(record.at("best_i"));
    return result;
  });
}

Json to_json(const NrtInstance& instance) {
  Json record;
  record["turn_id"] = instance.turn_id;
  record["adjusted_rank"] = instance.adjusted_rank;
  Json entries = Json::array();
  for (const auto& e : instance.entries) {
    Json entry;
    entry["kind"] = std::string(to_string(e.kind));
    entry["source_index"] = e.source_index ? Json(*e.source_index) : Json(nullptr);
    entry["score"] = e.score;
    entries.push_back(std::move(entry));
  }
  record["entries"] = std::move(entries);
  return record;
}

NrtInstance nrt_instance_from_json(const Json& record) {
  return schema_guard("nrt instance", [&] {
    NrtInstance instance;
    instance.turn_id = record.at("turn_id").get<std::string>();
    instance.adjusted_rank = record.at("adjusted_rank").get<int>();
    for (const auto& entry : record.at("entries")) {
      instance.entries.push_back({parse_entry_kind(entry.at("kind").get<std::string>()),
                                  read_optional_index(entry.at("source_index")),
                                  entry.at("score").get<double>()});
    }
    return instance;
  });
}

Json to_json(const NrtReport& report) {
  Json object;
  object["zero_acc"] = optional_number(report.zero_acc);
  object["nt"] = report.nt;
  object["nt_sq"] = optional_number(report.nt_sq);
  object["nt_pos"] = optional_number(report.nt_pos);
  object["nt_neg"] = optional_number(report.nt_neg);
  object["nt_weighted"] = optional_number(report.nt_weighted);
  Json histogram = Json::object();
  for (int r = report.histogram.r_min; r <= report.histogram.r_max; ++r)
    histogram[std::to_string(r)] = report.histogram.count(r);
  object["histogram"] = std::move(histogram);
  return object;
}

NrtReport nrt_report_from_json(const Json& object) {
  return schema_guard("nrt report", [&] {
    static const char* const kKeys[] = {"zero_acc", "nt",          "nt_sq",    "nt_pos",
                                        "nt_neg",   "nt_weighted", "histogram"};
    if (!object.is_object() || object.size() != std::size(kKeys))
      throw DataError("invalid nrt report: expected exactly the report keys");
    NrtReport report;
    report.zero_acc = read_optional_number(object, "zero_acc");
    report.nt = object.at("nt").get<double>();
    report.nt_sq = read_optional_number(object, "nt_sq");
    report.nt_pos = read_optional_number(object, "nt_pos");
    report.nt_neg = read_optional_number(object, "nt_neg");
    report.nt_weighted = read_optional_number(object, "nt_weighted");
    const auto& histogram = object.at("histogram");
    if (!histogram.is_object() || histogram.empty())
      throw DataError("invalid nrt report: histogram must be a non-empty object");
    report.histogram.r_min = std::numeric_limits<int>::max();
    report.histogram.r_max = std::numeric_limits<int>::min();
    for (auto it = histogram.begin(); it != histogram.end(); ++it) {
      std::size_t consumed = 0;
      const int r = std::stoi(it.key(), &consumed);
      if (consumed != it.key().size())
        throw DataError(fmt::format("invalid nrt report: bad rank key '{}'", it.key()));
      const auto n = it.value().get<std::size_t>();
      report.histogram.r_min = std::min(report.histogram.r_min, r);
      report.histogram.r_max = std::max(report.histogram.r_max, r);
      if (n > 0) report.histogram.counts[r] = n;
    }
    return report;
  });
}

Json to_json(const RankDelta& row) {
  Json record;
  record["rank"] = row.rank;
  record["delta"] = row.delta;
  record["ratio_percent"] = optional_number(row.ratio_percent);
  return record;
}

void write_json(const std::filesystem::path& path, const Json& object) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << object.dump(2) << '\n';
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::vector<Json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw DataError(fmt::format("{}:{}: invalid JSON: {}", path.string(), line_no, e.what()));
    }
  }
  return records;
}

}  // namespace groundrank
