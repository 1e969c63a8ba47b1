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

// groundrank command line: retrieval evaluation, null-positive rank test,
// threshold sweeps, model comparison and fine-tune data export.

#include <fmt/format.h>

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "groundrank/error.hpp"
#include "groundrank/harness.hpp"
#include "groundrank/reports.hpp"

namespace {

using namespace groundrank;

struct Overrides {
  std::string config_path;
  std::optional<double> threshold;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_tag;
  std::optional<std::string> knowledge_policy;
  std::optional<std::string> out;
  std::optional<std::string> corpus;
  std::optional<std::size_t> threads;
  std::optional<std::string> baseline;
  std::optional<std::string> candidate;
};

enum class ModelTagTarget { kKnowledge, kPersona, kNone };

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help,
                      Overrides& o) {
  auto* cmd = app.add_subcommand(name, help);
  cmd->add_option("--config", o.config_path, "Run configuration (INI)")->required();
  cmd->add_option("--threshold", o.threshold, "Persona score threshold");
  cmd->add_option("--scorer-endpoint", o.endpoint, "Scorer service URL (switches scorers to remote)");
  cmd->add_option("--model-tag", o.model_tag, "Service-side model tag");
  cmd->add_option("--knowledge-policy", o.knowledge_policy, "predicted | gold")
      ->check(CLI::IsMember({"predicted", "gold"}));
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--corpus", o.corpus, "Corpus file");
  cmd->add_option("--threads", o.threads, "Turn-level worker threads")->check(CLI::PositiveNumber);
  return cmd;
}

RunConfig resolve_config(const Overrides& o, ModelTagTarget tag_target) {
  RunConfig config = load_run_config(o.config_path);
  if (o.threshold) config.threshold = *o.threshold;
  if (o.endpoint) {
    for (auto* scorer : {&config.knowledge_scorer, &config.persona_scorer}) {
      scorer->kind = ScorerKind::kRemote;
      scorer->endpoint = *o.endpoint;
    }
  }
  if (o.model_tag) {
    if (tag_target == ModelTagTarget::kKnowledge) config.knowledge_scorer.model_tag = *o.model_tag;
    if (tag_target == ModelTagTarget::kPersona) config.persona_scorer.model_tag = *o.model_tag;
  }
  if (o.knowledge_policy) config.knowledge_policy = parse_knowledge_policy(*o.knowledge_policy);
  if (o.out) config.output_dir = *o.out;
  if (o.corpus) config.corpus_path = *o.corpus;
  if (o.threads) config.threads = *o.threads;
  if (o.baseline) config.baseline_report = *o.baseline;
  if (o.candidate) config.candidate_report = *o.candidate;
  return config;
}

std::string format_optional(const std::optional<double>& value) {
  return value ? fmt::format("{:.4f}", *value) : "n/a";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona and knowledge grounding retrieval with null-positive rank testing"};
  app.require_subcommand(1);
  Overrides o;

  auto* knowledge = add_command(app, "knowledge-eval", "Knowledge retrieval accuracy", o);
  auto* persona = add_command(app, "persona-eval", "Persona retrieval accuracy", o);
  auto* nrt = add_command(app, "nrt", "Null-positive rank test", o);
  auto* sweep = add_command(app, "sweep", "Persona threshold sweep", o);
  auto* compare = add_command(app, "compare", "Rank-delta table between two NRT reports", o);
  compare->add_option("--baseline", o.baseline, "Baseline nrt_report.json");
  compare->add_option("--candidate", o.candidate, "Candidate nrt_report.json");
  auto* exporter = add_command(app, "export-finetune", "Write persona fine-tuning pairs", o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (knowledge->parsed()) {
      const auto config = resolve_config(o, ModelTagTarget::kKnowledge);
      const auto report = run_knowledge_eval(config);
      fmt::print("knowledge_accuracy {:.4f} over {} turns -> {}\n", report.accuracy,
                 report.predictions.size(), config.output_dir.string());
    } else if (persona->parsed()) {
      const auto config = resolve_config(o, ModelTagTarget::kPersona);
      const auto report = run_persona_eval(config);
      fmt::print("persona_accuracy {:.4f} knowledge_accuracy {} threshold {} -> {}\n",
                 report.persona_accuracy, format_optional(report.knowledge_accuracy),
                 config.threshold, config.output_dir.string());
    } else if (nrt->parsed()) {
      const auto config = resolve_config(o, ModelTagTarget::kPersona);
      const auto run = run_nrt(config);
      const auto& r = run.report;
      fmt::print("zero_acc {} nt {:.4f} nt_sq {} nt_pos {} nt_neg {} -> {}\n",
                 format_optional(r.zero_acc), r.nt, format_optional(r.nt_sq),
                 format_optional(r.nt_pos), format_optional(r.nt_neg), config.output_dir.string());
    } else if (sweep->parsed()) {
      const auto config = resolve_config(o, ModelTagTarget::kPersona);
      for (const auto& point : run_threshold_sweep(config))
        fmt::print("{:.4f}\t{:.4f}\n", point.threshold, point.persona_accuracy);
    } else if (compare->parsed()) {
      const auto config = resolve_config(o, ModelTagTarget::kNone);
      fmt::print("rank\tdelta\tratio%\n");
      for (const auto& row : run_compare(config)) {
        fmt::print("{}\t{:+d}\t{}\n", row.rank, row.delta,
                   row.ratio_percent ? fmt::format("{:+.2f}", *row.ratio_percent) : "n/a");
      }
    } else if (exporter->parsed()) {
      const auto config = resolve_config(o, ModelTagTarget::kNone);
      const auto written = run_export_finetune(config);
      fmt::print("{} records -> {}\n", written, (config.output_dir / "finetune.jsonl").string());
    }
  } catch (const ScorerError& e) {
    std::cerr << "scorer error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
