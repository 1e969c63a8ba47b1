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

#include "groundrank/scorer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "groundrank/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace groundrank {

namespace {

using nlohmann::json;

bool is_token_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

struct SplitEndpoint {
  std::string host;    // scheme://host:port
  std::string prefix;  // path prefix without trailing slash
};

SplitEndpoint split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  const auto path_start = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  std::string prefix = endpoint.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {endpoint.substr(0, path_start), prefix};
}

httplib::Client make_client(const std::string& host, std::chrono::milliseconds timeout) {
  httplib::Client client(host);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  return client;
}

std::string error_detail(const httplib::Result& result) {
  if (!result) return httplib::to_string(result.error());
  try {
    const auto body = json::parse(result->body);
    if (body.is_object() && body.contains("error") && body["error"].is_string())
      return fmt::format("HTTP {}: {}", result->status, body["error"].get<std::string>());
  } catch (const json::exception&) {
  }
  return fmt::format("HTTP {}", result->status);
}

}  // namespace

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "lexical") return ScorerKind::kLexical;
  if (name == "remote") return ScorerKind::kRemote;
  throw DataError(fmt::format("unknown scorer kind '{}'", name));
}

std::string_view to_string(ScorerKind kind) {
  return kind == ScorerKind::kLexical ? "lexical" : "remote";
}

void validate(const ScorerConfig& config) {
  if (config.batch_size == 0) throw DataError("scorer batch_size must be positive");
  if (config.kind != ScorerKind::kRemote) return;
  if (!config.endpoint || config.endpoint->empty())
    throw DataError("remote scorer requires an endpoint");
  if (config.max_in_flight == 0) throw DataError("scorer max_in_flight must be positive");
  if (config.max_attempts < 1) throw DataError("scorer max_attempts must be at least 1");
  if (config.timeout.count() <= 0) throw DataError("scorer timeout must be positive");
}

std::vector<double> Scorer::score(std::span<const QueryAnswer> pairs) const {
  if (pairs.empty()) throw DataError("score request has no pairs");
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (pairs[k].query.empty() || pairs[k].answer.empty())
      throw DataError(fmt::format("pair {}: query and answer must be non-empty", k));
  }
  auto scores = do_score(pairs);
  if (scores.size() != pairs.size()) {
    throw ScorerError(
        fmt::format("scorer returned {} scores for {} pairs", scores.size(), pairs.size()),
        /*retryable=*/false);
  }
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!std::isfinite(scores[k]))
      throw ScorerError(fmt::format("non-finite score for pair {}", k), /*retryable=*/false);
  }
  return scores;
}

std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

double lexical_score(std::string_view query, std::string_view answer) {
  const auto a = lexical_tokens(query);
  const auto b = lexical_tokens(answer);
  if (a.empty() || b.empty()) return 0.0;
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const auto union_size = a.size() + b.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(union_size);
}

std::vector<double> LexicalScorer::do_score(std::span<const QueryAnswer> pairs) const {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& pair : pairs) scores.push_back(lexical_score(pair.query, pair.answer));
  return scores;
}

RemoteScorer::RemoteScorer(ScorerConfig config) : config_(std::move(config)) {
  if (config_.kind != ScorerKind::kRemote)
    throw DataError("RemoteScorer requires a remote scorer config");
  validate(config_);
  auto split = split_endpoint(*config_.endpoint);
  host_ = std::move(split.host);
  path_prefix_ = std::move(split.prefix);
}

HealthStatus RemoteScorer::health() const {
  auto client = make_client(host_, config_.timeout);
  const auto result = client.Get(path_prefix_ + "/health");
  if (!result) return {false, fmt::format("{}: {}", *config_.endpoint, error_detail(result))};
  if (result->status != 200) return {false, error_detail(result)};
  try {
    const auto body = json::parse(result->body);
    if (body.value("status", "") == "ok") return {true, "ok"};
    return {false, fmt::format("unexpected health body: {}", result->body)};
  } catch (const json::exception& e) {
    return {false, fmt::format("malformed health body: {}", e.what())};
  }
}

std::vector<double> RemoteScorer::score_chunk(std::span<const QueryAnswer> chunk,
                                              std::size_t offset) const {
  json request;
  request["model"] = config_.model_tag.value_or("default");
  request["pairs"] = json::array();
  for (const auto& pair : chunk)
    request["pairs"].push_back({{"query", pair.query}, {"answer", pair.answer}});
  const std::string body = request.dump();

  auto client = make_client(host_, config_.timeout);
  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    const auto result = client.Post(path_prefix_ + "/score", body, "application/json");
    const bool transient = !result || result->status >= 500 || result->status == 429;
    if (transient) {
      last_error = error_detail(result);
      if (attempt < config_.max_attempts) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      continue;
    }
    if (result->status != 200)
      throw ScorerError(fmt::format("score request rejected: {}", error_detail(result)),
                        /*retryable=*/false, attempt);

    json response;
    try {
      response = json::parse(result->body);
    } catch (const json::exception& e) {
      throw ScorerError(fmt::format("malformed score response: {}", e.what()), false, attempt);
    }
    if (!response.is_object() || !response.contains("scores") || !response["scores"].is_array())
      throw ScorerError("score response lacks a 'scores' array", false, attempt);
    const auto& values = response["scores"];
    if (values.size() != chunk.size()) {
      throw ScorerError(fmt::format("service returned {} scores for {} pairs", values.size(),
                                    chunk.size()),
                        false, attempt);
    }
    std::vector<double> scores;
    scores.reserve(chunk.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      // JSON has no NaN/inf; null or a non-number stands in for them.
      const double value = values[k].is_number() ? values[k].get<double>() : std::nan("");
      if (!std::isfinite(value))
        throw ScorerError(fmt::format("non-finite score for pair {}", offset + k), false, attempt);
      scores.push_back(value);
    }
    return scores;
  }
  throw ScorerError(fmt::format("scorer at {} unavailable after {} attempts: {}",
                                *config_.endpoint, config_.max_attempts, last_error),
                    /*retryable=*/true, config_.max_attempts);
}

std::vector<double> RemoteScorer::do_score(std::span<const QueryAnswer> pairs) const {
  const std::size_t batch = config_.batch_size;
  const std::size_t chunks = (pairs.size() + batch - 1) / batch;
  std::vector<double> scores(pairs.size());
  if (chunks == 1) {
    auto part = score_chunk(pairs, 0);
    std::copy(part.begin(), part.end(), scores.begin());
    return scores;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const std::size_t offset = c * batch;
      const auto chunk = pairs.subspan(offset, std::min(batch, pairs.size() - offset));
      try {
        auto part = score_chunk(chunk, offset);
        std::copy(part.begin(), part.end(), scores.begin() + static_cast<std::ptrdiff_t>(offset));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const std::size_t workers = std::min(config_.max_in_flight, chunks);
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();
  if (failure) std::rethrow_exception(failure);
  return scores;
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config) {
  validate(config);
  if (config.kind == ScorerKind::kLexical) return std::make_unique<LexicalScorer>();
  return std::make_unique<RemoteScorer>(config);
}

std::vector<double> score_batch(const ScorerConfig& config, std::span<const QueryAnswer> pairs) {
  return make_scorer(config)->score(pairs);
}

HealthStatus health_check(const ScorerConfig& config) {
  if (config.kind == ScorerKind::kLexical) return {true, "ok"};
  try {
    return RemoteScorer(config).health();
  } catch (const DataError& e) {
    return {false, e.what()};
  }
}

}  // namespace groundrank
