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

// JSON shapes of every file the harness writes or reads back.

#include <filesystem>
#include <string>
#include <vector>

#include "groundrank/nrt.hpp"
#include "groundrank/retrieval.hpp"
#include "json.hpp"

namespace groundrank {

using Json = nlohmann::ordered_json;

Json to_json(const RetrievalResult& result);
RetrievalResult retrieval_result_from_json(const Json& record);

Json to_json(const NrtInstance& instance);
NrtInstance nrt_instance_from_json(const Json& record);

// {"zero_acc", "nt", "nt_sq", "nt_pos", "nt_neg", "nt_weighted",
//  "histogram": {"<r>": count}}. Undefined metrics are null.
Json to_json(const NrtReport& report);
NrtReport nrt_report_from_json(const Json& object);

Json to_json(const RankDelta& row);

void write_json(const std::filesystem::path& path, const Json& object);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);
Json read_json(const std::filesystem::path& path);
std::vector<Json> read_jsonl(const std::filesystem::path& path);

}  // namespace groundrank
