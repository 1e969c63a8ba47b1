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

#include "groundrank/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <atomic>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "groundrank/error.hpp"
#include "groundrank/reports.hpp"

namespace groundrank {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"corpus", {"path", "format", "split", "window", "user_only"}},
      {"knowledge_scorer",
       {"kind", "endpoint", "model_tag", "batch_size", "timeout_ms", "max_in_flight",
        "max_attempts", "backoff_ms"}},
      {"persona_scorer",
       {"kind", "endpoint", "model_tag", "batch_size", "timeout_ms", "max_in_flight",
        "max_attempts", "backoff_ms"}},
      {"run",
       {"threshold", "knowledge_policy", "output_dir", "threads", "exclude_no_gold_persona"}},
      {"sweep", {"start", "stop", "step"}},
      {"nrt", {"weights"}},
      {"compare", {"baseline", "candidate"}},
  };
  return keys;
}

template <typename T>
T get_value(const pt::ptree& section, const std::string& where, const std::string& key) {
  try {
    return section.get<T>(key);
  } catch (const pt::ptree_error&) {
    throw DataError(fmt::format("config [{}] {}: invalid value '{}'", where, key,
                                section.get<std::string>(key, "")));
  }
}

bool get_bool(const pt::ptree& section, const std::string& where, const std::string& key) {
  const auto text = section.get<std::string>(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw DataError(fmt::format("config [{}] {}: expected a boolean, got '{}'", where, key, text));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

void read_scorer(const pt::ptree& section, const std::string& name, ScorerConfig& scorer) {
  for (const auto& [key, child] : section) {
    if (key == "kind") scorer.kind = parse_scorer_kind(child.data());
    if (key == "endpoint") scorer.endpoint = child.data();
    if (key == "model_tag") scorer.model_tag = child.data();
    if (key == "batch_size") scorer.batch_size = get_value<std::size_t>(section, name, key);
    if (key == "timeout_ms")
      scorer.timeout = std::chrono::milliseconds(get_value<long>(section, name, key));
    if (key == "max_in_flight") scorer.max_in_flight = get_value<std::size_t>(section, name, key);
    if (key == "max_attempts") scorer.max_attempts = get_value<int>(section, name, key);
    if (key == "backoff_ms")
      scorer.initial_backoff = std::chrono::milliseconds(get_value<long>(section, name, key));
  }
}

ScoreSummary summarize(const std::vector<double>& values) {
  ScoreSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

Json to_json(const ScoreSummary& s) {
  Json object;
  object["count"] = s.count;
  object["mean"] = s.mean;
  object["min"] = s.min;
  object["max"] = s.max;
  return object;
}

Json scorer_json(const ScorerConfig& config) {
  Json object;
  object["kind"] = std::string(to_string(config.kind));
  if (config.kind == ScorerKind::kRemote) {
    object["endpoint"] = config.endpoint.value_or("");
    object["model_tag"] = config.model_tag.value_or("default");
  }
  return object;
}

std::size_t knowledge_for(const DialogueTurn& turn, const Scorer& knowledge_scorer,
                          KnowledgePolicy policy) {
  if (policy == KnowledgePolicy::kGold) return require_gold_knowledge(turn);
  return retrieve_knowledge(turn, knowledge_scorer).best_knowledge;
}

struct Prepared {
  Corpus corpus;
  std::unique_ptr<Scorer> knowledge;
  std::unique_ptr<Scorer> persona;
};

void ensure_healthy(const ScorerConfig& config, const char* role) {
  const auto status = health_check(config);
  if (!status.ok)
    throw ScorerError(fmt::format("{} scorer unavailable: {}", role, status.detail),
                      /*retryable=*/true);
}

Prepared prepare(const RunConfig& config, bool need_knowledge_scorer, bool need_persona_scorer) {
  validate(config);
  Prepared prepared;
  prepared.corpus = load_corpus(config.corpus_path, config.corpus_format, config.load);
  if (prepared.corpus.turns.empty())
    throw DataError(fmt::format("corpus '{}' has no turns", config.corpus_path.string()));
  if (need_knowledge_scorer) {
    ensure_healthy(config.knowledge_scorer, "knowledge");
    prepared.knowledge = make_scorer(config.knowledge_scorer);
  } else {
    prepared.knowledge = std::make_unique<LexicalScorer>();
  }
  if (need_persona_scorer) {
    ensure_healthy(config.persona_scorer, "persona");
    prepared.persona = make_scorer(config.persona_scorer);
  }
  std::filesystem::create_directories(config.output_dir);
  return prepared;
}

Json run_header(const RunConfig& config, std::string_view command, const Corpus& corpus) {
  Json summary;
  summary["command"] = std::string(command);
  summary["corpus"] = config.corpus_path.string();
  summary["split"] = corpus.split_name;
  summary["turns"] = corpus.turns.size();
  return summary;
}

std::vector<Json> prediction_records(const std::vector<RetrievalResult>& predictions) {
  std::vector<Json> records;
  records.reserve(predictions.size());
  for (const auto& p : predictions) records.push_back(to_json(p));
  return records;
}

}  // namespace

std::map<int, double> parse_weight_table(std::string_view text) {
  std::map<int, double> weights;
  std::stringstream stream{std::string(text)};
  std::string item;
  while (std::getline(stream, item, ',')) {
    const std::string trimmed = normalize_text(item);
    if (trimmed.empty()) continue;
    const auto colon = trimmed.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
      std::size_t used = 0;
      const std::string rank_text = normalize_text(trimmed.substr(0, colon));
      const std::string weight_text = normalize_text(trimmed.substr(colon + 1));
      const int rank = std::stoi(rank_text, &used);
      if (used != rank_text.size()) throw std::invalid_argument("rank");
      const double weight = std::stod(weight_text, &used);
      if (used != weight_text.size() || !std::isfinite(weight)) throw std::invalid_argument("weight");
      weights[rank] = weight;
    } catch (const std::logic_error&) {
      throw DataError(fmt::format("invalid weight entry '{}' (expected rank:weight)", trimmed));
    }
  }
  if (weights.empty()) throw DataError("weight table is empty");
  return weights;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream stream{std::string(text)};
  try {
    pt::ini_parser::read_ini(stream, tree);
  } catch (const pt::ini_parser_error& e) {
    throw DataError(fmt::format("config: {}", e.what()));
  }

  RunConfig config;
  for (const auto& [name, section] : tree) {
    const auto known = known_keys().find(name);
    if (known == known_keys().end())
      throw DataError(fmt::format("config: unknown section [{}]", name));
    for (const auto& [key, value] : section) {
      if (!known->second.count(key))
        throw DataError(fmt::format("config: unknown key '{}' in [{}]", key, name));
    }
  }

  if (const auto corpus = tree.get_child_optional("corpus")) {
    if (auto v = corpus->get_optional<std::string>("path")) config.corpus_path = resolve(base_dir, *v);
    if (auto v = corpus->get_optional<std::string>("format"))
      config.corpus_format = parse_corpus_format(*v);
    if (auto v = corpus->get_optional<std::string>("split")) config.load.split_name = *v;
    if (corpus->count("window")) config.load.window = get_value<std::size_t>(*corpus, "corpus", "window");
    if (corpus->count("user_only")) config.load.user_only = get_bool(*corpus, "corpus", "user_only");
  }
  if (const auto s = tree.get_child_optional("knowledge_scorer"))
    read_scorer(*s, "knowledge_scorer", config.knowledge_scorer);
  if (const auto s = tree.get_child_optional("persona_scorer"))
    read_scorer(*s, "persona_scorer", config.persona_scorer);
  if (const auto run = tree.get_child_optional("run")) {
    if (run->count("threshold")) config.threshold = get_value<double>(*run, "run", "threshold");
    if (auto v = run->get_optional<std::string>("knowledge_policy"))
      config.knowledge_policy = parse_knowledge_policy(*v);
    if (auto v = run->get_optional<std::string>("output_dir")) config.output_dir = resolve(base_dir, *v);
    if (run->count("threads")) config.threads = get_value<std::size_t>(*run, "run", "threads");
    if (run->count("exclude_no_gold_persona"))
      config.accuracy.exclude_no_gold_persona = get_bool(*run, "run", "exclude_no_gold_persona");
  }
  if (const auto sweep = tree.get_child_optional("sweep")) {
    SweepGrid grid;
    if (sweep->count("start")) grid.start = get_value<double>(*sweep, "sweep", "start");
    if (sweep->count("stop")) grid.stop = get_value<double>(*sweep, "sweep", "stop");
    if (sweep->count("step")) grid.step = get_value<double>(*sweep, "sweep", "step");
    config.sweep = grid;
  }
  if (const auto nrt = tree.get_child_optional("nrt")) {
    if (auto v = nrt->get_optional<std::string>("weights")) config.nrt_weights = parse_weight_table(*v);
  }
  if (const auto compare = tree.get_child_optional("compare")) {
    if (auto v = compare->get_optional<std::string>("baseline"))
      config.baseline_report = resolve(base_dir, *v);
    if (auto v = compare->get_optional<std::string>("candidate"))
      config.candidate_report = resolve(base_dir, *v);
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.parent_path());
}

void validate(const RunConfig& config) {
  if (config.corpus_path.empty()) throw DataError("config: corpus path is not set");
  validate(config.knowledge_scorer);
  validate(config.persona_scorer);
  if (!std::isfinite(config.threshold)) throw DataError("config: threshold must be finite");
  if (config.threads == 0) throw DataError("config: threads must be positive");
  if (config.sweep) {
    if (!(config.sweep->start <= config.sweep->stop))
      throw DataError("config: sweep requires start <= stop");
    if (!(config.sweep->step > 0.0)) throw DataError("config: sweep requires step > 0");
  }
}

std::vector<double> sweep_thresholds(const SweepGrid& grid) {
  if (!(grid.start <= grid.stop) || !(grid.step > 0.0))
    throw DataError("sweep requires start <= stop and step > 0");
  const double span = (grid.stop - grid.start) / grid.step;
  const auto points = static_cast<std::size_t>(std::floor(span * (1.0 + 1e-12) + 1e-9)) + 1;
  std::vector<double> thresholds;
  thresholds.reserve(points);
  for (std::size_t k = 0; k < points; ++k)
    thresholds.push_back(grid.start + static_cast<double>(k) * grid.step);
  return thresholds;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

KnowledgeEvalReport evaluate_knowledge(const Corpus& corpus, const Scorer& scorer,
                                       std::size_t threads) {
  KnowledgeEvalReport report;
  report.predictions.resize(corpus.turns.size());
  parallel_for(corpus.turns.size(), threads, [&](std::size_t t) {
    const auto& turn = corpus.turns[t];
    const auto selection = retrieve_knowledge(turn, scorer);
    auto& p = report.predictions[t];
    p.turn_id = turn.turn_id;
    p.predicted_knowledge_index = selection.best_knowledge;
    p.best_persona_index = selection.best_persona;
  });
  report.accuracy = accuracy(report.predictions, corpus, AccuracyTarget::kKnowledge);
  return report;
}

PersonaEvalReport evaluate_persona(const Corpus& corpus, const Scorer& knowledge_scorer,
                                   const Scorer& persona_scorer, double threshold,
                                   KnowledgePolicy policy, const AccuracyOptions& options,
                                   std::size_t threads) {
  PersonaEvalReport report;
  report.predictions.resize(corpus.turns.size());
  parallel_for(corpus.turns.size(), threads, [&](std::size_t t) {
    report.predictions[t] =
        retrieve_turn(corpus.turns[t], knowledge_scorer, persona_scorer, threshold, policy);
  });
  report.persona_accuracy =
      accuracy(report.predictions, corpus, AccuracyTarget::kPersona, options);
  if (policy == KnowledgePolicy::kPredicted) {
    const bool labelled = std::all_of(corpus.turns.begin(), corpus.turns.end(),
                                      [](const DialogueTurn& t) { return t.gold_knowledge_index.has_value(); });
    if (labelled)
      report.knowledge_accuracy = accuracy(report.predictions, corpus, AccuracyTarget::kKnowledge);
  }
  std::vector<double> all;
  std::vector<double> gold;
  for (std::size_t t = 0; t < corpus.turns.size(); ++t) {
    const auto& scores = report.predictions[t].persona_scores;
    all.insert(all.end(), scores.begin(), scores.end());
    if (const auto g = corpus.turns[t].gold_persona_index) gold.push_back(scores[*g]);
  }
  report.all_scores = summarize(all);
  report.gold_scores = summarize(gold);
  return report;
}

NrtRunReport evaluate_nrt(const Corpus& corpus, const Scorer& knowledge_scorer,
                          const Scorer& persona_scorer, KnowledgePolicy policy,
                          const std::map<int, double>* weights, std::size_t threads) {
  NrtRunReport run;
  run.instances.resize(corpus.turns.size());
  parallel_for(corpus.turns.size(), threads, [&](std::size_t t) {
    const auto& turn = corpus.turns[t];
    run.instances[t] =
        build_nrt_instance(turn, knowledge_for(turn, knowledge_scorer, policy), persona_scorer);
  });
  run.report = make_nrt_report(run.instances, corpus, weights);
  return run;
}

std::vector<SweepPoint> evaluate_sweep(const Corpus& corpus, const Scorer& knowledge_scorer,
                                       const Scorer& persona_scorer, KnowledgePolicy policy,
                                       const SweepGrid& grid, const AccuracyOptions& options,
                                       std::size_t threads) {
  const auto thresholds = sweep_thresholds(grid);
  std::vector<RetrievalResult> cached(corpus.turns.size());
  parallel_for(corpus.turns.size(), threads, [&](std::size_t t) {
    const auto& turn = corpus.turns[t];
    auto& r = cached[t];
    r.turn_id = turn.turn_id;
    r.predicted_knowledge_index = knowledge_for(turn, knowledge_scorer, policy);
    r.persona_scores = score_personas(turn, r.predicted_knowledge_index, persona_scorer);
  });

  std::vector<SweepPoint> curve;
  curve.reserve(thresholds.size());
  for (double threshold : thresholds) {
    for (auto& r : cached) r.predicted_persona_index = select_persona(r.persona_scores, threshold);
    curve.push_back({threshold, accuracy(cached, corpus, AccuracyTarget::kPersona, options)});
  }
  return curve;
}

std::vector<RankDelta> compare_models(const NrtReport& baseline, const NrtReport& candidate) {
  return rank_delta_analysis(baseline.histogram, candidate.histogram);
}

KnowledgeEvalReport run_knowledge_eval(const RunConfig& config) {
  auto prepared = prepare(config, /*need_knowledge_scorer=*/true, /*need_persona_scorer=*/false);
  auto report = evaluate_knowledge(prepared.corpus, *prepared.knowledge, config.threads);

  write_jsonl(config.output_dir / "knowledge_predictions.jsonl",
              prediction_records(report.predictions));
  Json summary = run_header(config, "knowledge-eval", prepared.corpus);
  summary["knowledge_scorer"] = scorer_json(config.knowledge_scorer);
  summary["knowledge_accuracy"] = report.accuracy;
  write_json(config.output_dir / "knowledge_summary.json", summary);
  return report;
}

PersonaEvalReport run_persona_eval(const RunConfig& config) {
  const bool predicted = config.knowledge_policy == KnowledgePolicy::kPredicted;
  auto prepared = prepare(config, predicted, /*need_persona_scorer=*/true);
  auto report = evaluate_persona(prepared.corpus, *prepared.knowledge, *prepared.persona,
                                 config.threshold, config.knowledge_policy, config.accuracy,
                                 config.threads);

  write_jsonl(config.output_dir / "persona_predictions.jsonl",
              prediction_records(report.predictions));
  Json summary = run_header(config, "persona-eval", prepared.corpus);
  if (predicted) summary["knowledge_scorer"] = scorer_json(config.knowledge_scorer);
  summary["persona_scorer"] = scorer_json(config.persona_scorer);
  summary["knowledge_policy"] = std::string(to_string(config.knowledge_policy));
  summary["threshold"] = config.threshold;
  summary["exclude_no_gold_persona"] = config.accuracy.exclude_no_gold_persona;
  summary["persona_accuracy"] = report.persona_accuracy;
  summary["knowledge_accuracy"] =
      report.knowledge_accuracy ? Json(*report.knowledge_accuracy) : Json(nullptr);
  summary["persona_scores"] = to_json(report.all_scores);
  summary["gold_persona_scores"] = to_json(report.gold_scores);
  write_json(config.output_dir / "persona_summary.json", summary);
  return report;
}

NrtRunReport run_nrt(const RunConfig& config) {
  const bool predicted = config.knowledge_policy == KnowledgePolicy::kPredicted;
  auto prepared = prepare(config, predicted, /*need_persona_scorer=*/true);
  const auto* weights = config.nrt_weights ? &*config.nrt_weights : nullptr;
  auto run = evaluate_nrt(prepared.corpus, *prepared.knowledge, *prepared.persona,
                          config.knowledge_policy, weights, config.threads);

  std::vector<Json> records;
  records.reserve(run.instances.size());
  for (const auto& instance : run.instances) records.push_back(to_json(instance));
  write_jsonl(config.output_dir / "nrt_instances.jsonl", records);
  write_json(config.output_dir / "nrt_report.json", to_json(run.report));
  return run;
}

std::vector<SweepPoint> run_threshold_sweep(const RunConfig& config) {
  const bool predicted = config.knowledge_policy == KnowledgePolicy::kPredicted;
  auto prepared = prepare(config, predicted, /*need_persona_scorer=*/true);
  const SweepGrid grid = config.sweep.value_or(SweepGrid{});
  auto curve = evaluate_sweep(prepared.corpus, *prepared.knowledge, *prepared.persona,
                              config.knowledge_policy, grid, config.accuracy, config.threads);

  std::vector<Json> records;
  for (const auto& point : curve) {
    Json record;
    record["threshold"] = point.threshold;
    record["persona_accuracy"] = point.persona_accuracy;
    records.push_back(std::move(record));
  }
  write_jsonl(config.output_dir / "sweep_curve.jsonl", records);

  const auto best = std::max_element(curve.begin(), curve.end(), [](const auto& a, const auto& b) {
    return a.persona_accuracy < b.persona_accuracy;
  });
  Json summary = run_header(config, "sweep", prepared.corpus);
  summary["persona_scorer"] = scorer_json(config.persona_scorer);
  summary["knowledge_policy"] = std::string(to_string(config.knowledge_policy));
  summary["start"] = grid.start;
  summary["stop"] = grid.stop;
  summary["step"] = grid.step;
  summary["points"] = curve.size();
  summary["best_threshold"] = best->threshold;
  summary["best_persona_accuracy"] = best->persona_accuracy;
  write_json(config.output_dir / "sweep_summary.json", summary);
  return curve;
}

std::vector<RankDelta> run_compare(const RunConfig& config) {
  if (!config.baseline_report || !config.candidate_report)
    throw DataError("compare requires baseline and candidate report paths");
  const auto baseline = nrt_report_from_json(read_json(*config.baseline_report));
  const auto candidate = nrt_report_from_json(read_json(*config.candidate_report));
  auto rows = compare_models(baseline, candidate);

  std::filesystem::create_directories(config.output_dir);
  std::vector<Json> records;
  for (const auto& row : rows) records.push_back(to_json(row));
  write_jsonl(config.output_dir / "rank_delta.jsonl", records);
  Json summary;
  summary["command"] = "compare";
  summary["baseline"] = config.baseline_report->string();
  summary["candidate"] = config.candidate_report->string();
  summary["baseline_total"] = baseline.histogram.total();
  summary["candidate_total"] = candidate.histogram.total();
  summary["baseline_nt"] = baseline.nt;
  summary["candidate_nt"] = candidate.nt;
  write_json(config.output_dir / "compare_summary.json", summary);
  return rows;
}

std::size_t run_export_finetune(const RunConfig& config) {
  validate(config);
  const Corpus corpus = load_corpus(config.corpus_path, config.corpus_format, config.load);
  std::filesystem::create_directories(config.output_dir);
  const std::size_t written = export_finetune_data(corpus, config.output_dir / "finetune.jsonl");
  Json summary = run_header(config, "export-finetune", corpus);
  summary["records"] = written;
  write_json(config.output_dir / "finetune_summary.json", summary);
  return written;
}

}  // namespace groundrank
