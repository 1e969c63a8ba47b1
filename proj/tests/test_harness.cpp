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

#include "doctest.h"
#include "groundrank/error.hpp"
#include "groundrank/harness.hpp"
#include "groundrank/reports.hpp"
#include "support/fixtures.hpp"

using namespace groundrank;
using groundrank::testing::TempDir;

namespace {

RunConfig planted_config(const TempDir& dir, std::size_t turns = 40) {
  write_canonical(groundrank::testing::planted_corpus(turns, 1234), dir / "corpus.jsonl");
  RunConfig config;
  config.corpus_path = dir / "corpus.jsonl";
  config.output_dir = dir / "out";
  config.threshold = 0.0;
  return config;
}

}  // namespace

TEST_CASE("parse_run_config") {
  const auto config = parse_run_config(R"(
; experiment record
[corpus]
path = data/test.jsonl
format = focus_raw
split = test
window = 2
user_only = true

[knowledge_scorer]
kind = remote
endpoint = http://127.0.0.1:8000
model_tag = msmarco-minilm
batch_size = 128
timeout_ms = 5000

[persona_scorer]
kind = lexical

[run]
threshold = 0.55
knowledge_policy = gold
output_dir = results
threads = 3
exclude_no_gold_persona = true

[sweep]
start = 0.1
stop = 0.9
step = 0.1

[nrt]
weights = -1:1, 0:1, 1:0.5

[compare]
baseline = zs/nrt_report.json
candidate = ft/nrt_report.json
)",
                                       "/experiments");
  CHECK(config.corpus_path == "/experiments/data/test.jsonl");
  CHECK(config.corpus_format == CorpusFormat::kFocusRaw);
  CHECK(config.load.split_name == "test");
  CHECK(config.load.window == 2);
  CHECK(config.load.user_only);
  CHECK(config.knowledge_scorer.kind == ScorerKind::kRemote);
  CHECK(config.knowledge_scorer.endpoint == "http://127.0.0.1:8000");
  CHECK(config.knowledge_scorer.model_tag == "msmarco-minilm");
  CHECK(config.knowledge_scorer.batch_size == 128);
  CHECK(config.knowledge_scorer.timeout == std::chrono::milliseconds(5000));
  CHECK(config.persona_scorer.kind == ScorerKind::kLexical);
  CHECK(config.threshold == 0.55);
  CHECK(config.knowledge_policy == KnowledgePolicy::kGold);
  CHECK(config.output_dir == "/experiments/results");
  CHECK(config.threads == 3);
  CHECK(config.accuracy.exclude_no_gold_persona);
  REQUIRE(config.sweep.has_value());
  CHECK(config.sweep->step == 0.1);
  REQUIRE(config.nrt_weights.has_value());
  CHECK(config.nrt_weights->at(1) == 0.5);
  CHECK(config.baseline_report == "/experiments/zs/nrt_report.json");
  CHECK_NOTHROW(validate(config));
}

TEST_CASE("run config defaults and errors") {
  const auto defaults = parse_run_config("[corpus]\npath = c.jsonl\n");
  CHECK(defaults.threshold == 0.5);
  CHECK(defaults.knowledge_policy == KnowledgePolicy::kPredicted);
  CHECK_FALSE(defaults.sweep.has_value());

  CHECK_THROWS_WITH_AS(parse_run_config("[corpus]\nfile = x\n"), doctest::Contains("unknown key"),
                       DataError);
  CHECK_THROWS_WITH_AS(parse_run_config("[extras]\na = 1\n"), doctest::Contains("unknown section"),
                       DataError);
  CHECK_THROWS_AS(parse_run_config("[run]\nthreshold = high\n"), DataError);
  CHECK_THROWS_AS(parse_run_config("[run]\nknowledge_policy = oracle\n"), DataError);
  CHECK_THROWS_AS(parse_run_config("[nrt]\nweights = 1-2\n"), DataError);

  auto bad_sweep = parse_run_config("[corpus]\npath = c\n[sweep]\nstart = 0.8\nstop = 0.2\n");
  CHECK_THROWS_AS(validate(bad_sweep), DataError);
  bad_sweep = parse_run_config("[corpus]\npath = c\n[sweep]\nstep = 0\n");
  CHECK_THROWS_AS(validate(bad_sweep), DataError);
  auto remote = parse_run_config("[corpus]\npath = c\n[persona_scorer]\nkind = remote\n");
  CHECK_THROWS_AS(validate(remote), DataError);
  CHECK_THROWS_AS(validate(RunConfig{}), DataError);
}

TEST_CASE("sweep_thresholds grid arithmetic") {
  CHECK(sweep_thresholds({0.0, 1.0, 0.5}) == std::vector<double>{0.0, 0.5, 1.0});
  const auto fine = sweep_thresholds(SweepGrid{});
  CHECK(fine.size() == 21);
  CHECK(fine.back() == doctest::Approx(1.0));
  CHECK(sweep_thresholds({0.3, 0.3, 0.1}) == std::vector<double>{0.3});
  CHECK(sweep_thresholds({0.0, 0.3, 0.1}).size() == 4);
  CHECK_THROWS_AS(sweep_thresholds({1.0, 0.0, 0.1}), DataError);
}

TEST_CASE("parallel_for runs every index and rethrows the first failure") {
  std::vector<int> seen(100, 0);
  parallel_for(seen.size(), 4, [&](std::size_t i) { seen[i] = static_cast<int>(i); });
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == static_cast<int>(i));
  CHECK_THROWS_WITH(parallel_for(50, 4,
                                 [](std::size_t i) {
                                   if (i == 7 || i == 30) throw DataError("fail " + std::to_string(i));
                                 }),
                    "fail 7");
}

TEST_CASE("planted and adversarial knowledge evaluation") {
  LexicalScorer lexical;
  const auto planted = groundrank::testing::planted_corpus(50, 8);
  CHECK(evaluate_knowledge(planted, lexical, 4).accuracy == 1.0);
  const auto adversarial = groundrank::testing::adversarial_corpus(50, 8);
  CHECK(evaluate_knowledge(adversarial, lexical).accuracy == 0.0);
}

TEST_CASE("persona evaluation") {
  LexicalScorer lexical;
  const auto corpus = groundrank::testing::planted_corpus(30, 4);
  const auto at_zero = evaluate_persona(corpus, lexical, lexical, 0.0, KnowledgePolicy::kPredicted);
  CHECK(at_zero.persona_accuracy == 1.0);
  CHECK(at_zero.knowledge_accuracy == 1.0);
  CHECK(at_zero.all_scores.count == 150);
  CHECK(at_zero.gold_scores.count == 30);
  CHECK(at_zero.gold_scores.min > at_zero.all_scores.min);

  const auto abstain = evaluate_persona(corpus, lexical, lexical, 1.1, KnowledgePolicy::kGold);
  CHECK(abstain.persona_accuracy == 0.0);
  CHECK_FALSE(abstain.knowledge_accuracy.has_value());
  for (const auto& p : abstain.predictions) CHECK_FALSE(p.predicted_persona_index.has_value());
}

TEST_CASE("sweep equals fresh persona runs and never touches knowledge") {
  LexicalScorer lexical;
  auto corpus = groundrank::testing::planted_corpus(30, 77);
  corpus.turns[0].gold_persona_index.reset();
  const SweepGrid grid{0.0, 0.6, 0.05};
  const auto curve = evaluate_sweep(corpus, lexical, lexical, KnowledgePolicy::kPredicted, grid);
  REQUIRE(curve.size() == 13);
  std::vector<std::size_t> knowledge;
  for (const auto& point : curve) {
    const auto fresh = evaluate_persona(corpus, lexical, lexical, point.threshold,
                                        KnowledgePolicy::kPredicted);
    CHECK(fresh.persona_accuracy == point.persona_accuracy);
    std::vector<std::size_t> k;
    for (const auto& p : fresh.predictions) k.push_back(p.predicted_knowledge_index);
    if (knowledge.empty()) knowledge = k;
    CHECK(k == knowledge);
  }
}

TEST_CASE("run_* write round-trippable reports") {
  TempDir dir;
  auto config = planted_config(dir);

  const auto knowledge = run_knowledge_eval(config);
  CHECK(knowledge.accuracy == 1.0);
  const auto knowledge_records = read_jsonl(config.output_dir / "knowledge_predictions.jsonl");
  REQUIRE(knowledge_records.size() == 40);
  for (std::size_t t = 0; t < knowledge_records.size(); ++t)
    CHECK(retrieval_result_from_json(knowledge_records[t]) == knowledge.predictions[t]);
  CHECK(read_json(config.output_dir / "knowledge_summary.json").at("knowledge_accuracy") == 1.0);

  const auto persona = run_persona_eval(config);
  CHECK(persona.persona_accuracy == 1.0);
  const auto persona_records = read_jsonl(config.output_dir / "persona_predictions.jsonl");
  for (std::size_t t = 0; t < persona_records.size(); ++t)
    CHECK(retrieval_result_from_json(persona_records[t]) == persona.predictions[t]);

  const auto nrt = run_nrt(config);
  CHECK(nrt.report.nt == 0.0);
  CHECK(nrt.report.zero_acc == 1.0);
  const auto saved = nrt_report_from_json(read_json(config.output_dir / "nrt_report.json"));
  CHECK(saved.histogram == nrt.report.histogram);
  CHECK(saved.nt == nrt.report.nt);
  CHECK(saved.nt_pos == nrt.report.nt_pos);
  CHECK_FALSE(saved.nt_neg.has_value() != nrt.report.nt_neg.has_value());
  const auto instance_records = read_jsonl(config.output_dir / "nrt_instances.jsonl");
  for (std::size_t t = 0; t < instance_records.size(); ++t)
    CHECK(nrt_instance_from_json(instance_records[t]) == nrt.instances[t]);

  config.sweep = SweepGrid{0.0, 1.0, 0.5};
  const auto curve = run_threshold_sweep(config);
  CHECK(curve.size() == 3);
  CHECK(read_jsonl(config.output_dir / "sweep_curve.jsonl").size() == 3);

  CHECK(run_export_finetune(config) == 200);
  CHECK(read_finetune_data(config.output_dir / "finetune.jsonl").size() == 200);

  // Same deterministic run twice gives byte-identical reports.
  const auto first = groundrank::testing::read_text(config.output_dir / "nrt_report.json");
  run_nrt(config);
  CHECK(groundrank::testing::read_text(config.output_dir / "nrt_report.json") == first);
}

TEST_CASE("compare_models") {
  TempDir dir;
  NrtReport baseline;
  baseline.nt = 1.0;
  baseline.histogram.r_min = -1;
  baseline.histogram.r_max = 4;
  baseline.histogram.counts = {{0, 10}, {3, 4}};
  NrtReport candidate = baseline;
  candidate.histogram.counts = {{0, 12}, {3, 2}, {4, 1}};

  for (const auto& row : compare_models(baseline, baseline)) CHECK(row.delta == 0);
  const auto rows = compare_models(baseline, candidate);
  CHECK(rows[1] == RankDelta{0, 2, 20.0});
  CHECK(rows[4] == RankDelta{3, -2, -50.0});
  CHECK_FALSE(rows[5].ratio_percent.has_value());

  write_json(dir / "a.json", to_json(baseline));
  write_json(dir / "b.json", to_json(candidate));
  const auto reread = nrt_report_from_json(read_json(dir / "a.json"));
  CHECK(reread.histogram == baseline.histogram);
  CHECK_FALSE(reread.zero_acc.has_value());

  RunConfig config;
  config.baseline_report = dir / "a.json";
  config.candidate_report = dir / "b.json";
  config.output_dir = dir / "cmp";
  CHECK(run_compare(config) == rows);
  CHECK(read_jsonl(dir / "cmp" / "rank_delta.jsonl").size() == 6);

  NrtReport narrow = candidate;
  narrow.histogram.r_max = 3;
  narrow.histogram.counts.erase(4);
  CHECK_THROWS_AS(compare_models(baseline, narrow), DataError);
}

TEST_CASE("report schema violations") {
  CHECK_THROWS_AS(nrt_report_from_json(Json::parse(R"({"nt": 1})")), DataError);
  CHECK_THROWS_AS(retrieval_result_from_json(Json::parse(R"({"turn_id": 3})")), DataError);
  auto good = to_json(NrtReport{std::nullopt, 0.5, 0.5, 0.5, 0.0, 0.5, {{{1, 1}}, -1, 1}});
  good["histogram"] = Json::parse(R"({"x": 1})");
  CHECK_THROWS_AS(nrt_report_from_json(good), DataError);
}

TEST_CASE("run with an unreachable remote scorer fails as a scorer error") {
  TempDir dir;
  auto config = planted_config(dir, 3);
  config.knowledge_scorer.kind = ScorerKind::kRemote;
  config.knowledge_scorer.endpoint = "http://127.0.0.1:1";
  config.knowledge_scorer.timeout = std::chrono::milliseconds(500);
  CHECK_THROWS_AS(run_knowledge_eval(config), ScorerError);
}
