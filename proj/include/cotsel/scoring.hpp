#pragma once

// Difficulty scoring: a two-token judge read from next-token logprobs, a
// solve-rate labeler built on the verifier, a durable score cache, and the
// bounded-parallel batch driver that ties them together.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cotsel/completions_client.hpp"
#include "cotsel/corpus.hpp"
#include "cotsel/error.hpp"
#include "cotsel/hash.hpp"
#include "cotsel/jsonl.hpp"
#include "cotsel/verifier.hpp"
#include "json.hpp"

namespace cotsel::scoring {

inline constexpr std::string_view kDefaultJudgePrompt =
    "Please judge the difficulty of this instruction and return 1 if difficult "
    "or 0 if not.\n\n{question}\n";

inline constexpr std::string_view kDefaultSolvePrompt =
    "{question}\nPlease reason step by step, and put your final answer within "
    "\\boxed{}.";

struct JudgeConfig {
  std::string endpoint_url;
  std::string model_name;
  std::string prompt_template{kDefaultJudgePrompt};
  std::string positive_token = "1";
  std::string negative_token = "0";
  std::size_t max_inflight = 8;
  std::chrono::milliseconds timeout{60000};
  int retries = 3;
  std::chrono::milliseconds backoff_base{500};
  // Number of top logprobs requested per position.
  int top_logprobs = 20;
  // A token missing from the top set is floored this far (in nats) below
  // the smallest returned logprob.
  double floor_margin = 1.0;
  std::string api_key_env = "COTSEL_API_KEY";

  void validate() const {
    if (endpoint_url.empty()) throw ConfigError("judge endpoint URL is not set");
    if (positive_token == negative_token) {
      throw ConfigError("positive and negative judge tokens must differ");
    }
    if (max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
    if (prompt_template.find("{question}") == std::string::npos) {
      throw ConfigError("prompt template lacks a {question} slot");
    }
    if (retries < 0) throw ConfigError("retries must be >= 0");
  }
};

struct SolveRateConfig {
  std::string endpoint_url;
  std::string model_name;
  std::string prompt_template{kDefaultSolvePrompt};
  std::size_t n_samples = 1;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  // Hard iff solved_fraction <= hard_threshold.
  double hard_threshold = 0.0;
  std::size_t max_inflight = 8;
  std::chrono::milliseconds timeout{300000};
  int retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::string api_key_env = "COTSEL_API_KEY";

  void validate() const {
    if (endpoint_url.empty()) throw ConfigError("solve-rate endpoint URL is not set");
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
    if (max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
    if (prompt_template.find("{question}") == std::string::npos) {
      throw ConfigError("prompt template lacks a {question} slot");
    }
  }
};

enum class ScoreSource { kJudge, kSolveRate };

inline std::string_view to_string(ScoreSource s) {
  return s == ScoreSource::kJudge ? "judge" : "solve-rate";
}

struct DifficultyScore {
  std::string record_id;
  double value = 0.0;
  // Absent for solve-rate scores.
  std::optional<double> logp_pos;
  std::optional<double> logp_neg;
  ScoreSource source = ScoreSource::kJudge;
  std::string model_name;
  std::string created_at;
  // At least one judge token was missing from the top-logprob set.
  bool floored = false;
  std::optional<double> solved_fraction;
};

// exp(a) / (exp(a) + exp(b)) with the larger argument factored out.
inline double softmax_two(double logp_pos, double logp_neg) {
  const double ninf = -std::numeric_limits<double>::infinity();
  if (std::isnan(logp_pos) || std::isnan(logp_neg) || logp_pos == std::numeric_limits<double>::infinity() ||
      logp_neg == std::numeric_limits<double>::infinity()) {
    throw MetricError("judge logprobs must be finite or -inf");
  }
  if (logp_pos == ninf && logp_neg == ninf) {
    throw MetricError("undefined difficulty score: both logprobs are -inf");
  }
  const double m = std::max(logp_pos, logp_neg);
  const double ep = std::exp(logp_pos - m);
  const double en = std::exp(logp_neg - m);
  return ep / (ep + en);
}

inline std::string render_prompt(std::string_view tmpl, std::string_view question) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto hit = tmpl.find("{question}", pos);
    out.append(tmpl.substr(pos, hit == std::string_view::npos ? tmpl.npos : hit - pos));
    if (hit == std::string_view::npos) break;
    out.append(question);
    pos = hit + 10;
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Top logprob entries of the first generated position, from either the
// legacy completions shape or the chat-completions shape.
inline std::vector<std::pair<std::string, double>> first_position_top_logprobs(
    const nlohmann::json& response) {
  try {
    const auto& choice = response.at("choices").at(0);
    const auto& lp = choice.at("logprobs");
    std::vector<std::pair<std::string, double>> out;
    if (lp.contains("top_logprobs")) {
      for (const auto& [tok, v] : lp.at("top_logprobs").at(0).items()) {
        out.emplace_back(tok, v.get<double>());
      }
    } else {
      for (const auto& e : lp.at("content").at(0).at("top_logprobs")) {
        out.emplace_back(e.at("token").get<std::string>(), e.at("logprob").get<double>());
      }
    }
    if (out.empty()) throw ProtocolError("endpoint returned an empty top-logprob set");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("unexpected logprob payload: ") + e.what());
  }
}

namespace detail {

inline std::string_view trim_ws(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\n' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\n' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

// Best logprob among entries equal to the token up to surrounding
// whitespace (tokenizers often emit " 1").
inline std::optional<double> lookup_token(
    const std::vector<std::pair<std::string, double>>& top, std::string_view token) {
  std::optional<double> best;
  for (const auto& [tok, lp] : top) {
    if (tok == token || trim_ws(tok) == token) {
      if (!best || lp > *best) best = lp;
    }
  }
  return best;
}

}  // namespace detail

// Scores from an already-fetched endpoint response.
inline DifficultyScore judge_score_from_response(const nlohmann::json& response,
                                                 const JudgeConfig& cfg,
                                                 std::string record_id) {
  const auto top = first_position_top_logprobs(response);
  double lowest = top.front().second;
  for (const auto& e : top) lowest = std::min(lowest, e.second);
  const double floor = lowest - cfg.floor_margin;
  DifficultyScore s;
  s.record_id = std::move(record_id);
  auto pos = detail::lookup_token(top, cfg.positive_token);
  auto neg = detail::lookup_token(top, cfg.negative_token);
  s.floored = !pos || !neg;
  s.logp_pos = pos.value_or(floor);
  s.logp_neg = neg.value_or(floor);
  s.value = softmax_two(*s.logp_pos, *s.logp_neg);
  s.source = ScoreSource::kJudge;
  s.model_name = cfg.model_name;
  s.created_at = utc_timestamp();
  return s;
}

inline nlohmann::json judge_request(std::string_view question, const JudgeConfig& cfg) {
  return nlohmann::json{{"model", cfg.model_name},
                        {"prompt", render_prompt(cfg.prompt_template, question)},
                        {"max_tokens", 1},
                        {"temperature", 0},
                        {"logprobs", cfg.top_logprobs}};
}

inline CompletionsClient make_client(const JudgeConfig& cfg) {
  return CompletionsClient(cfg.endpoint_url, cfg.timeout,
                           RetryPolicy{cfg.retries, cfg.backoff_base, std::chrono::milliseconds(30000)},
                           api_key_from_env(cfg.api_key_env));
}

inline CompletionsClient make_client(const SolveRateConfig& cfg) {
  return CompletionsClient(cfg.endpoint_url, cfg.timeout,
                           RetryPolicy{cfg.retries, cfg.backoff_base, std::chrono::milliseconds(30000)},
                           api_key_from_env(cfg.api_key_env));
}

// Transport failures surface as ScoringError carrying the record id;
// malformed payloads as ProtocolError.
inline DifficultyScore judge_difficulty(std::string_view question, const JudgeConfig& cfg,
                                        CompletionsClient& client,
                                        std::string record_id = {}) {
  if (question.empty()) throw ScoringError(record_id, "empty question");
  nlohmann::json response;
  try {
    response = client.post(judge_request(question, cfg));
  } catch (const TransportError& e) {
    throw ScoringError(record_id, "record " + record_id + ": " + e.what());
  }
  return judge_score_from_response(response, cfg, std::move(record_id));
}

inline DifficultyScore judge_difficulty(std::string_view question, const JudgeConfig& cfg,
                                        std::string record_id = {}) {
  cfg.validate();
  auto client = make_client(cfg);
  return judge_difficulty(question, cfg, client, std::move(record_id));
}

enum class Difficulty { kEasy, kHard };

inline std::string_view to_string(Difficulty d) {
  return d == Difficulty::kHard ? "hard" : "easy";
}

inline Difficulty parse_difficulty(std::string_view s) {
  if (s == "hard" || s == "1") return Difficulty::kHard;
  if (s == "easy" || s == "0") return Difficulty::kEasy;
  throw SchemaError("unknown difficulty label '" + std::string(s) + "'");
}

struct SolveRateResult {
  Difficulty label = Difficulty::kEasy;
  double solved_fraction = 0.0;
  DifficultyScore score;
};

inline std::vector<std::string> completion_texts(const nlohmann::json& response) {
  try {
    std::vector<std::string> out;
    for (const auto& c : response.at("choices")) {
      if (c.contains("text")) {
        out.push_back(c["text"].get<std::string>());
      } else {
        out.push_back(c.at("message").at("content").get<std::string>());
      }
    }
    if (out.empty()) throw ProtocolError("endpoint returned no choices");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("unexpected completion payload: ") + e.what());
  }
}

inline SolveRateResult solve_rate_from_fraction(std::string record_id, double solved_fraction,
                                                const SolveRateConfig& cfg) {
  SolveRateResult r;
  r.solved_fraction = solved_fraction;
  r.label = solved_fraction <= cfg.hard_threshold ? Difficulty::kHard : Difficulty::kEasy;
  r.score.record_id = std::move(record_id);
  r.score.value = 1.0 - solved_fraction;
  r.score.source = ScoreSource::kSolveRate;
  r.score.model_name = cfg.model_name;
  r.score.created_at = utc_timestamp();
  r.score.solved_fraction = solved_fraction;
  return r;
}

// nullopt when the record has no gold answer (skipped, not an error).
inline std::optional<SolveRateResult> solve_rate_label(const corpus::InstructionRecord& record,
                                                       const SolveRateConfig& cfg,
                                                       CompletionsClient& client) {
  if (!record.gold_answer) return std::nullopt;
  const auto gold = verifier::gold_answer(*record.gold_answer);
  const std::string prompt = render_prompt(cfg.prompt_template, record.question);
  std::size_t solved = 0;
  std::size_t seen = 0;
  while (seen < cfg.n_samples) {
    const std::size_t want = cfg.n_samples - seen;
    nlohmann::json body{{"model", cfg.model_name},
                        {"prompt", prompt},
                        {"max_tokens", cfg.max_output_tokens},
                        {"temperature", cfg.temperature},
                        {"n", want}};
    nlohmann::json response;
    try {
      response = client.post(body);
    } catch (const TransportError& e) {
      throw ScoringError(record.id, "record " + record.id + ": " + e.what());
    }
    auto texts = completion_texts(response);
    if (texts.size() > want) texts.resize(want);
    for (const auto& t : texts) {
      if (verifier::answers_equal(verifier::extract_boxed(t), gold)) ++solved;
    }
    seen += texts.size();
  }
  return solve_rate_from_fraction(record.id,
                                  static_cast<double>(solved) / static_cast<double>(seen), cfg);
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

namespace detail {
inline std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline std::string cache_key(std::string_view question, std::string_view model_name,
                             std::string_view prompt_template) {
  return hash_fields(question, model_name, prompt_template);
}

inline std::string solve_rate_cache_key(std::string_view question, const SolveRateConfig& cfg) {
  return hash_fields("solve-rate", question, cfg.model_name, cfg.prompt_template,
                     std::to_string(cfg.n_samples), detail::real_text(cfg.temperature),
                     std::to_string(cfg.max_output_tokens));
}

inline nlohmann::ordered_json to_json(const std::string& key, const DifficultyScore& s) {
  nlohmann::ordered_json j;
  j["key"] = key;
  j["record_id"] = s.record_id;
  j["value"] = s.value;
  j["logp_pos"] = s.logp_pos ? nlohmann::ordered_json(*s.logp_pos) : nlohmann::ordered_json();
  j["logp_neg"] = s.logp_neg ? nlohmann::ordered_json(*s.logp_neg) : nlohmann::ordered_json();
  j["source"] = std::string(to_string(s.source));
  j["model_name"] = s.model_name;
  j["created_at"] = s.created_at;
  j["floored"] = s.floored;
  if (s.solved_fraction) j["solved_fraction"] = *s.solved_fraction;
  return j;
}

inline std::optional<std::pair<std::string, DifficultyScore>> score_from_json(
    const nlohmann::json& j) {
  try {
    if (!j.is_object()) return std::nullopt;
    DifficultyScore s;
    std::string key = j.at("key").get<std::string>();
    s.record_id = j.value("record_id", "");
    s.value = j.at("value").get<double>();
    if (key.empty() || !(s.value >= 0.0 && s.value <= 1.0)) return std::nullopt;
    if (j.contains("logp_pos") && !j["logp_pos"].is_null()) s.logp_pos = j["logp_pos"].get<double>();
    if (j.contains("logp_neg") && !j["logp_neg"].is_null()) s.logp_neg = j["logp_neg"].get<double>();
    const auto src = j.value("source", "judge");
    if (src == "judge") {
      s.source = ScoreSource::kJudge;
    } else if (src == "solve-rate") {
      s.source = ScoreSource::kSolveRate;
    } else {
      return std::nullopt;
    }
    s.model_name = j.value("model_name", "");
    s.created_at = j.value("created_at", "");
    s.floored = j.value("floored", false);
    if (j.contains("solved_fraction")) s.solved_fraction = j["solved_fraction"].get<double>();
    return std::make_pair(std::move(key), std::move(s));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

// Append-only line-delimited cache; the last line for a key wins. Corrupt
// lines are skipped on load and counted. put() is safe to call from any
// thread; writes are serialized.
class ScoreCache {
 public:
  ScoreCache() = default;

  // An empty path keeps the cache in memory only.
  explicit ScoreCache(std::string path) : path_(std::move(path)) {
    if (path_.empty()) return;
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::optional<std::pair<std::string, DifficultyScore>> parsed;
      try {
        parsed = score_from_json(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception&) {
      }
      if (!parsed) {
        ++corrupt_;
        continue;
      }
      entries_[parsed->first] = std::move(parsed->second);
    }
  }

  std::optional<DifficultyScore> get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, const DifficultyScore& score) {
    std::lock_guard lock(mu_);
    entries_[key] = score;
    if (path_.empty()) return;
    if (!out_.is_open()) {
      out_.open(path_, std::ios::binary | std::ios::app);
      if (!out_) throw IoError("cannot append to score cache " + path_);
    }
    out_ << to_json(key, score).dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }
  std::size_t corrupt_lines() const { return corrupt_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, DifficultyScore> entries_;
  std::ofstream out_;
  std::size_t corrupt_ = 0;
};

// ---------------------------------------------------------------------------
// Batch drivers
// ---------------------------------------------------------------------------

struct ScoreRequest {
  std::string record_id;
  std::string question;
};

struct ScoringFailure {
  std::string record_id;
  std::string message;
};

struct BatchOutcome {
  // Keyed by record id, so the result does not depend on completion order.
  std::map<std::string, DifficultyScore> scores;
  std::vector<ScoringFailure> failures;
  std::size_t from_cache = 0;
  std::size_t scored = 0;
  std::size_t http_attempts = 0;
};

// Runs work(i, client) for every index on at most max_inflight threads,
// each owning one client.
template <class MakeClient, class Work>
std::size_t run_bounded(std::size_t n, std::size_t max_inflight, MakeClient&& make, Work&& work) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(max_inflight, n));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> attempts{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      auto client = make();
      for (std::size_t i = next++; i < n; i = next++) work(i, client);
      attempts += client.attempts();
    });
  }
  for (auto& th : threads) th.join();
  return attempts.load();
}

inline BatchOutcome score_batch(const std::vector<ScoreRequest>& requests, const JudgeConfig& cfg,
                                ScoreCache& cache, bool rescore = false) {
  cfg.validate();
  BatchOutcome out;
  std::mutex mu;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    if (!rescore) {
      if (auto hit = cache.get(cache_key(r.question, cfg.model_name, cfg.prompt_template))) {
        hit->record_id = r.record_id;
        out.scores[r.record_id] = std::move(*hit);
        ++out.from_cache;
        continue;
      }
    }
    pending.push_back(i);
  }
  if (pending.empty()) return out;
  out.http_attempts = run_bounded(
      pending.size(), cfg.max_inflight, [&] { return make_client(cfg); },
      [&](std::size_t p, CompletionsClient& client) {
        const auto& r = requests[pending[p]];
        try {
          auto s = judge_difficulty(r.question, cfg, client, r.record_id);
          cache.put(cache_key(r.question, cfg.model_name, cfg.prompt_template), s);
          std::lock_guard lock(mu);
          out.scores[r.record_id] = std::move(s);
          ++out.scored;
        } catch (const Error& e) {
          std::lock_guard lock(mu);
          out.failures.push_back({r.record_id, e.what()});
        }
      });
  std::sort(out.failures.begin(), out.failures.end(),
            [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
  return out;
}

struct SolveRateBatch {
  std::map<std::string, SolveRateResult> results;
  std::vector<ScoringFailure> failures;
  std::vector<std::string> skipped_missing_gold;
  std::size_t from_cache = 0;
  std::size_t scored = 0;
  std::size_t http_attempts = 0;
};

inline SolveRateBatch solve_rate_batch(const std::vector<corpus::InstructionRecord>& records,
                                       const SolveRateConfig& cfg, ScoreCache& cache,
                                       bool rescore = false) {
  cfg.validate();
  SolveRateBatch out;
  std::mutex mu;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.gold_answer) {
      out.skipped_missing_gold.push_back(r.id);
      continue;
    }
    if (!rescore) {
      if (auto hit = cache.get(solve_rate_cache_key(r.question, cfg))) {
        const double frac = hit->solved_fraction.value_or(1.0 - hit->value);
        auto res = solve_rate_from_fraction(r.id, frac, cfg);
        res.score.created_at = hit->created_at;
        out.results[r.id] = std::move(res);
        ++out.from_cache;
        continue;
      }
    }
    pending.push_back(i);
  }
  if (pending.empty()) return out;
  out.http_attempts = run_bounded(
      pending.size(), cfg.max_inflight, [&] { return make_client(cfg); },
      [&](std::size_t p, CompletionsClient& client) {
        const auto& r = records[pending[p]];
        try {
          auto res = solve_rate_label(r, cfg, client);
          cache.put(solve_rate_cache_key(r.question, cfg), res->score);
          std::lock_guard lock(mu);
          out.results[r.id] = std::move(*res);
          ++out.scored;
        } catch (const Error& e) {
          std::lock_guard lock(mu);
          out.failures.push_back({r.id, e.what()});
        }
      });
  std::sort(out.failures.begin(), out.failures.end(),
            [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Judge training data
// ---------------------------------------------------------------------------

struct JudgeExample {
  std::string question;
  int label = 0;  // 1 = hard, 0 = easy
};

struct JudgeDataset {
  std::vector<JudgeExample> examples;
  std::size_t hard = 0;
  std::size_t easy = 0;
  std::vector<std::string> warnings;
};

// hard -> 1, easy -> 0. A repeated question keeps its first position and
// takes the last label seen.
inline JudgeDataset build_judge_dataset(
    const std::vector<std::pair<std::string, Difficulty>>& labels) {
  if (labels.empty()) throw SchemaError("no labels to build a judge dataset from");
  JudgeDataset ds;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t duplicates = 0;
  for (const auto& [q, d] : labels) {
    const int y = d == Difficulty::kHard ? 1 : 0;
    auto [it, inserted] = index.try_emplace(q, ds.examples.size());
    if (inserted) {
      ds.examples.push_back({q, y});
    } else {
      ds.examples[it->second].label = y;
      ++duplicates;
    }
  }
  for (const auto& e : ds.examples) (e.label == 1 ? ds.hard : ds.easy)++;
  if (duplicates > 0) {
    ds.warnings.push_back(std::to_string(duplicates) +
                          " duplicate question(s) merged; last label kept");
  }
  if (ds.hard == 0 || ds.easy == 0) {
    ds.warnings.push_back(std::string("judge dataset has a single class (") +
                          (ds.hard == 0 ? "easy" : "hard") + " only)");
  }
  return ds;
}

// Same record layout as the SFT subset: the rendered judge prompt as the
// question and the label token as the response.
inline std::size_t write_judge_dataset(const JudgeDataset& ds, corpus::SftFormat format,
                                       const std::string& path,
                                       std::string_view prompt_template = kDefaultJudgePrompt,
                                       std::string_view positive_token = "1",
                                       std::string_view negative_token = "0") {
  JsonlWriter w(path);
  for (const auto& e : ds.examples) {
    w.write(corpus::sft_line(render_prompt(prompt_template, e.question),
                             e.label == 1 ? positive_token : negative_token, format));
  }
  w.close();
  return w.lines();
}

struct LabelRow {
  std::string id;
  std::string question;
  Difficulty label = Difficulty::kEasy;
  double solved_fraction = 0.0;
};

inline nlohmann::ordered_json to_json(const LabelRow& r) {
  return nlohmann::ordered_json{{"id", r.id},
                                {"question", r.question},
                                {"label", std::string(to_string(r.label))},
                                {"solved_fraction", r.solved_fraction}};
}

// Lines of {"question": ..., "label": "hard" | "easy"}.
inline std::vector<std::pair<std::string, Difficulty>> read_labels(const std::string& path,
                                                                   std::size_t* skipped = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read labels file " + path);
  std::vector<std::pair<std::string, Difficulty>> out;
  std::string line;
  std::size_t bad = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const auto& lab = j.at("label");
      out.emplace_back(j.at("question").get<std::string>(),
                       parse_difficulty(lab.is_string() ? lab.get<std::string>() : lab.dump()));
    } catch (const std::exception&) {
      ++bad;
    }
  }
  if (skipped) *skipped = bad;
  return out;
}

}  // namespace cotsel::scoring
