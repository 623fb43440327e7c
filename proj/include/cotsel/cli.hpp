#pragma once

// Command-line front end: one subcommand per pipeline stage, shared options
// that may also come from a key-value config file (flags win), and a run
// manifest written next to every output.
//
// Exit codes: 0 success, 2 configuration or input error, 3 every scoring
// request failed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cotsel/corpus.hpp"
#include "cotsel/hash.hpp"
#include "cotsel/ranking.hpp"
#include "cotsel/report.hpp"
#include "cotsel/scoring.hpp"
#include "cotsel/tokenizer.hpp"
#include "cotsel/trace.hpp"
#include "cotsel/trace_metrics.hpp"
#include "cotsel/verifier.hpp"
#include "json.hpp"

namespace cotsel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitScoringFailed = 3;

struct RunConfig {
  std::string pool;
  corpus::FieldMapping mapping;
  std::string lexicon_path;
  std::string length_unit = "tokens";
  std::string tokenizer = "pretoken";
  scoring::JudgeConfig judge;
  scoring::SolveRateConfig solve;
  int judge_timeout_ms = 60000;
  int judge_backoff_ms = 500;
  int solve_timeout_ms = 300000;
  std::string strategy = "joint";
  double k_fraction = 0.10;
  std::size_t k_count = 0;
  double w = 0.25;
  std::uint64_t seed = 0;
  std::string score_source = "judge";
  std::string sft_format = "plain";
  std::string cache = "scores.cache.jsonl";
  std::string out_dir = "run";
  std::string log_level = "info";

  trace::RethinkLexicon lexicon() const {
    if (lexicon_path.empty()) return trace::RethinkLexicon{};
    return trace::load_lexicon(lexicon_path);
  }

  ranking::SelectionSpec selection_spec() const {
    ranking::SelectionSpec spec;
    spec.strategy = ranking::parse_strategy(strategy);
    spec.k = k_count > 0 ? ranking::KSpec::of_count(k_count)
                         : ranking::KSpec::of_fraction(k_fraction);
    spec.w = w;
    spec.seed = seed;
    spec.length_unit = trace::parse_length_unit(length_unit);
    spec.validate();
    return spec;
  }

  std::string require_pool() const {
    if (pool.empty()) throw ConfigError("no pool file given (--pool)");
    if (!std::filesystem::exists(pool)) throw IoError("pool file not found: " + pool);
    return pool;
  }
};

class Session {
 public:
  Session(const RunConfig& cfg, std::ostream& out, std::ostream& err)
      : cfg_(cfg), out_(out), err_(err) {}

  void info(const std::string& msg) const {
    if (cfg_.log_level != "quiet") err_ << "[info] " << msg << '\n';
  }
  void warn(const std::string& msg) const {
    if (cfg_.log_level != "quiet") err_ << "[warn] " << msg << '\n';
  }
  std::ostream& out() const { return out_; }

  std::string out_path(const std::string& name) const {
    std::filesystem::create_directories(cfg_.out_dir);
    return (std::filesystem::path(cfg_.out_dir) / name).string();
  }

  // Config snapshot plus digests of the inputs, beside the outputs.
  void write_run_manifest(const std::string& command, const std::string& config_text,
                          const std::vector<std::string>& inputs) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config"] = config_text;
    nlohmann::ordered_json digests = nlohmann::ordered_json::object();
    for (const auto& p : inputs) {
      if (!p.empty() && std::filesystem::exists(p)) digests[p] = file_digest(p);
    }
    j["inputs"] = digests;
    std::ofstream f(out_path(command + ".run.json"), std::ios::binary | std::ios::trunc);
    f << j.dump(2) << '\n';
    if (!f) throw IoError("cannot write run manifest in " + cfg_.out_dir);
  }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
  std::ostream& err_;
};

inline std::unique_ptr<Segmenter> segmenter_for(const RunConfig& cfg, bool required) {
  auto seg = make_segmenter(cfg.tokenizer);
  if (required && !seg) {
    throw ConfigError("length unit 'tokens' needs a tokenizer; set --tokenizer pretoken or "
                      "vocab:<path>, or use --length-unit words");
  }
  return seg;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

inline int cmd_ingest(const RunConfig& cfg, const std::string& dedupe_mode, const Session& s) {
  const auto pool_path = cfg.require_pool();
  auto reader = corpus::load_corpus(pool_path, cfg.mapping);
  corpus::PoolValidator validator;
  std::optional<corpus::Deduper> deduper;
  if (dedupe_mode != "none") deduper.emplace(corpus::parse_dedupe_key(dedupe_mode));
  JsonlWriter writer(s.out_path("pool.jsonl"));
  std::size_t malformed_tags = 0;
  reader.for_each([&](corpus::InstructionRecord r) {
    validator.add(r);
    if (r.malformed_tags) ++malformed_tags;
    if (deduper && !deduper->admit(r)) return;
    writer.write(corpus::to_pool_json(r));
  });
  writer.close();
  const auto& st = validator.stats();
  nlohmann::ordered_json j{{"total", st.total},
                           {"with_trace", st.with_trace},
                           {"without_trace", st.without_trace()},
                           {"empty_trace", st.empty_trace},
                           {"missing_gold", st.missing_gold},
                           {"duplicate_ids", st.duplicate_ids},
                           {"malformed_tags", malformed_tags},
                           {"skipped_lines", reader.skipped()},
                           {"dedupe", dedupe_mode},
                           {"dedupe_removed", deduper ? deduper->removed() : 0},
                           {"written", writer.lines()}};
  std::ofstream(s.out_path("ingest_stats.json"), std::ios::binary | std::ios::trunc)
      << j.dump(2) << '\n';
  for (const auto& [k, v] : j.items()) s.out() << k << '\t' << v.dump() << '\n';
  if (reader.skipped() > 0) {
    s.warn(std::to_string(reader.skipped()) + " malformed line(s) skipped; first: " +
           reader.first_failure());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

inline int cmd_analyze(const RunConfig& cfg, const Session& s) {
  const auto pool_path = cfg.require_pool();
  const auto unit = trace::parse_length_unit(cfg.length_unit);
  auto seg = segmenter_for(cfg, unit == trace::LengthUnit::kTokens);
  const auto lexicon = cfg.lexicon();
  auto reader = corpus::load_corpus(pool_path, cfg.mapping, /*allow_empty=*/true);
  trace::MetricsWriter writer(s.out_path("metrics.tsv"), lexicon);
  reader.for_each([&](const corpus::InstructionRecord& r) {
    writer.write(trace::compute_metrics(r, lexicon, seg.get()));
  });
  writer.close();
  s.out() << "records\t" << writer.rows() << '\n';
  s.out() << "skipped_lines\t" << reader.skipped() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

inline int cmd_score(const RunConfig& cfg, const std::string& mode, bool rescore,
                     const Session& s) {
  const auto pool = corpus::read_pool(cfg.require_pool(), cfg.mapping);
  scoring::ScoreCache cache(cfg.cache);
  if (cache.corrupt_lines() > 0) {
    s.warn(std::to_string(cache.corrupt_lines()) + " corrupt cache line(s) ignored in " +
           cfg.cache);
  }
  std::size_t scored = 0, cached = 0, failed = 0;
  std::vector<scoring::ScoringFailure> failures;
  if (mode == "judge") {
    std::vector<scoring::ScoreRequest> reqs;
    reqs.reserve(pool.records.size());
    for (const auto& r : pool.records) reqs.push_back({r.id, r.question});
    auto res = scoring::score_batch(reqs, cfg.judge, cache, rescore);
    scored = res.scored;
    cached = res.from_cache;
    failures = std::move(res.failures);
    std::ofstream tsv(s.out_path("scores.tsv"), std::ios::binary | std::ios::trunc);
    tsv << "id\tdifficulty\tlogp_pos\tlogp_neg\tfloored\n";
    for (const auto& [id, sc] : res.scores) {
      tsv << id << '\t' << trace::format_double(sc.value) << '\t'
          << trace::format_double(sc.logp_pos.value_or(0.0)) << '\t'
          << trace::format_double(sc.logp_neg.value_or(0.0)) << '\t' << (sc.floored ? 1 : 0)
          << '\n';
    }
    s.out() << "requests\t" << res.http_attempts << '\n';
  } else if (mode == "solve-rate") {
    auto res = scoring::solve_rate_batch(pool.records, cfg.solve, cache, rescore);
    scored = res.scored;
    cached = res.from_cache;
    failures = std::move(res.failures);
    JsonlWriter labels(s.out_path("labels.jsonl"));
    for (const auto& r : pool.records) {
      auto it = res.results.find(r.id);
      if (it == res.results.end()) continue;
      labels.write(scoring::to_json(
          scoring::LabelRow{r.id, r.question, it->second.label, it->second.solved_fraction}));
    }
    labels.close();
    if (!res.skipped_missing_gold.empty()) {
      s.warn(std::to_string(res.skipped_missing_gold.size()) +
             " record(s) without a gold answer skipped");
    }
    s.out() << "skipped_missing_gold\t" << res.skipped_missing_gold.size() << '\n';
    s.out() << "requests\t" << res.http_attempts << '\n';
  } else {
    throw ConfigError("unknown score mode '" + mode + "' (expected judge or solve-rate)");
  }
  failed = failures.size();
  {
    std::ofstream f(s.out_path("score_failures.tsv"), std::ios::binary | std::ios::trunc);
    f << "id\terror\n";
    for (const auto& fl : failures) f << fl.record_id << '\t' << fl.message << '\n';
  }
  for (const auto& fl : failures) s.warn("scoring failed for " + fl.record_id + ": " + fl.message);
  s.out() << "scored\t" << scored << '\n' << "cached\t" << cached << '\n'
          << "failed\t" << failed << '\n';
  if (failed > 0 && scored == 0 && cached == 0) return kExitScoringFailed;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

inline std::optional<double> cached_difficulty(const RunConfig& cfg,
                                               const scoring::ScoreCache& cache,
                                               const corpus::InstructionRecord& r) {
  std::optional<scoring::DifficultyScore> hit;
  if (cfg.score_source == "judge") {
    hit = cache.get(scoring::cache_key(r.question, cfg.judge.model_name, cfg.judge.prompt_template));
  } else if (cfg.score_source == "solve-rate") {
    hit = cache.get(scoring::solve_rate_cache_key(r.question, cfg.solve));
  } else {
    throw ConfigError("unknown score source '" + cfg.score_source + "'");
  }
  if (!hit) return std::nullopt;
  return hit->value;
}

inline int cmd_select(const RunConfig& cfg, const Session& s) {
  const auto spec = cfg.selection_spec();
  auto pool = corpus::read_pool(cfg.require_pool(), cfg.mapping);
  auto seg = segmenter_for(cfg, spec.length_unit == trace::LengthUnit::kTokens);
  std::optional<scoring::ScoreCache> cache;
  if (ranking::needs_difficulty(spec.strategy)) cache.emplace(cfg.cache);

  std::vector<ranking::PoolEntry> entries;
  entries.reserve(pool.records.size());
  std::size_t with_score = 0;
  for (const auto& r : pool.records) {
    ranking::PoolEntry e;
    e.id = r.id;
    e.length = trace::measure_trace(r.trace, spec.length_unit, seg.get());
    e.category = r.category;
    if (cache) {
      e.difficulty = cached_difficulty(cfg, *cache, r);
      if (e.difficulty) ++with_score;
    }
    entries.push_back(std::move(e));
  }
  if (cache && with_score == 0) {
    throw ConfigError("strategy '" + cfg.strategy + "' needs difficulty scores but none are in " +
                      cfg.cache + "; run `cotsel score` first");
  }
  auto sel = ranking::select(spec, entries);
  if (!sel.excluded.empty()) {
    s.warn(std::to_string(sel.excluded.size()) +
           " record(s) without a difficulty score excluded; see select_report.txt");
  }
  ranking::write_manifest(sel, s.out_path("selection.json"));
  {
    std::ofstream rep(s.out_path("select_report.txt"), std::ios::binary | std::ios::trunc);
    rep << "strategy\t" << cfg.strategy << '\n'
        << "k\t" << sel.ids.size() << '\n'
        << "manifest_hash\t" << sel.manifest_hash << '\n'
        << "excluded\t" << sel.excluded.size() << '\n';
    for (const auto& id : sel.excluded) rep << "excluded_id\t" << id << '\n';
  }
  std::unordered_map<std::string, const corpus::InstructionRecord*> by_id;
  for (const auto& r : pool.records) by_id.emplace(r.id, &r);
  std::vector<corpus::InstructionRecord> subset;
  subset.reserve(sel.ids.size());
  for (const auto& id : sel.ids) subset.push_back(*by_id.at(id));
  corpus::write_sft_subset(subset, corpus::parse_sft_format(cfg.sft_format),
                           s.out_path("subset.jsonl"), cfg.mapping.think_open,
                           cfg.mapping.think_close);
  s.out() << "strategy\t" << cfg.strategy << '\n'
          << "k\t" << sel.ids.size() << '\n'
          << "manifest_hash\t" << sel.manifest_hash << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

inline int cmd_stats(const RunConfig& cfg, std::size_t n_bins, const std::string& generations,
                     const std::vector<std::string>& overlap, const Session& s) {
  const auto lexicon = cfg.lexicon();
  bool did_something = false;
  if (!cfg.pool.empty()) {
    const auto unit = trace::parse_length_unit(cfg.length_unit);
    auto seg = segmenter_for(cfg, unit == trace::LengthUnit::kTokens);
    std::vector<trace::TraceMetrics> metrics;
    corpus::load_corpus(cfg.require_pool(), cfg.mapping).for_each(
        [&](const corpus::InstructionRecord& r) {
          metrics.push_back(trace::compute_metrics(r, lexicon, seg.get()));
        });
    auto binned = report::length_binned_rethink(metrics, n_bins, unit);
    for (const auto& w : binned.warnings) s.warn(w);
    report::write_binned_table(binned, s.out_path("rethink_by_length.tsv"));
    const double rho = report::length_rethink_correlation(metrics, unit);
    std::ofstream(s.out_path("length_rethink_correlation.tsv"), std::ios::binary | std::ios::trunc)
        << "measure\tvalue\nspearman_rho\t" << trace::format_double(rho) << "\nrecords\t"
        << metrics.size() << '\n';
    s.out() << "spearman_rho\t" << trace::format_double(rho) << '\n';
    s.out() << "bins\t" << binned.per_bin.size() << '\n';
    did_something = true;
  }
  if (!generations.empty()) {
    auto rows = report::generation_rethink_stats(report::read_generations(generations), lexicon);
    report::write_generation_table(rows, s.out_path("generation_rethink.tsv"));
    for (const auto& g : rows) {
      s.out() << "group\t" << g.group << '\t' << g.rethink_total << '\t'
              << trace::format_double(g.mean_rethink) << '\n';
    }
    did_something = true;
  }
  if (!overlap.empty()) {
    if (overlap.size() < 2) throw ConfigError("--overlap needs at least two manifests");
    std::vector<ranking::Selection> sels;
    for (const auto& p : overlap) sels.push_back(ranking::read_manifest(p));
    std::vector<report::OverlapReport> rows;
    for (std::size_t i = 0; i < sels.size(); ++i) {
      for (std::size_t j = i + 1; j < sels.size(); ++j) {
        rows.push_back(report::selection_overlap(sels[i], sels[j]));
        rows.back().a = overlap[i];
        rows.back().b = overlap[j];
      }
    }
    report::write_overlap_table(rows, s.out_path("selection_overlap.tsv"));
    for (const auto& r : rows) {
      s.out() << "jaccard\t" << r.a << '\t' << r.b << '\t' << trace::format_double(r.jaccard)
              << '\n';
    }
    did_something = true;
  }
  if (!did_something) throw ConfigError("stats needs --pool, --generations or --overlap");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

inline int cmd_eval(const RunConfig& cfg, const std::string& eval_file, std::size_t k,
                    const Session& s) {
  (void)cfg;
  if (eval_file.empty()) throw ConfigError("eval needs --eval-file");
  auto file = verifier::read_eval_file(eval_file);
  if (file.samples.empty()) throw SchemaError("no eval samples in " + eval_file);
  std::ofstream tsv(s.out_path("verdicts.tsv"), std::ios::binary | std::ios::trunc);
  tsv << "problem_id\tk\tcorrect\tpass_at_1\tmaj_at_k\tmajority_answer\n";
  double pass_sum = 0.0;
  std::size_t maj_hits = 0;
  std::size_t max_k = 0;
  for (const auto& sample : file.samples) {
    const std::size_t kk = k == 0 ? sample.candidates.size() : k;
    const auto v = verifier::score_sample(sample, kk);
    pass_sum += v.pass_at_1;
    maj_hits += v.maj_at_k ? 1 : 0;
    max_k = std::max(max_k, v.k);
    tsv << sample.problem_id << '\t' << v.k << '\t' << v.correct << '\t'
        << trace::format_double(v.pass_at_1) << '\t' << (v.maj_at_k ? 1 : 0) << '\t'
        << v.majority_answer << '\n';
  }
  const double n = static_cast<double>(file.samples.size());
  s.out() << "problems\t" << file.samples.size() << '\n'
          << "pass_at_1\t" << trace::format_double(pass_sum / n) << '\n'
          << "maj_at_" << max_k << '\t' << trace::format_double(static_cast<double>(maj_hits) / n)
          << '\n';
  if (file.skipped > 0) s.warn(std::to_string(file.skipped) + " malformed eval line(s) skipped");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// emit-judge-data
// ---------------------------------------------------------------------------

inline int cmd_emit_judge_data(const RunConfig& cfg, const std::string& labels_path,
                               const Session& s) {
  if (labels_path.empty()) throw ConfigError("emit-judge-data needs --labels");
  std::size_t skipped = 0;
  auto labels = scoring::read_labels(labels_path, &skipped);
  auto ds = scoring::build_judge_dataset(labels);
  for (const auto& w : ds.warnings) s.warn(w);
  scoring::write_judge_dataset(ds, corpus::parse_sft_format(cfg.sft_format),
                               s.out_path("judge_train.jsonl"), cfg.judge.prompt_template,
                               cfg.judge.positive_token, cfg.judge.negative_token);
  s.out() << "examples\t" << ds.examples.size() << '\n'
          << "hard\t" << ds.hard << '\n'
          << "easy\t" << ds.easy << '\n'
          << "skipped_lines\t" << skipped << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

inline void add_shared_options(CLI::App& app, RunConfig& cfg) {
  auto& m = cfg.mapping;
  app.add_option("--pool", cfg.pool, "Line-delimited instruction pool");
  app.add_option("--question-key", m.question_key, "Question field")->capture_default_str();
  app.add_option("--response-key", m.response_key, "Response field")->capture_default_str();
  app.add_option("--gold-key", m.gold_key, "Gold answer field")->capture_default_str();
  app.add_option("--category-key", m.category_key, "Category field")->capture_default_str();
  app.add_option("--id-key", m.id_key, "Record id field")->capture_default_str();
  app.add_option("--source-key", m.source_key, "Source field")->capture_default_str();
  app.add_option("--think-open", m.think_open, "Opening think delimiter")->capture_default_str();
  app.add_option("--think-close", m.think_close, "Closing think delimiter")->capture_default_str();
  app.add_option("--lexicon", cfg.lexicon_path, "Rethinking lexicon file (JSON)");
  app.add_option("--length-unit", cfg.length_unit, "chars | words | tokens")
      ->check(CLI::IsMember({"chars", "words", "tokens"}))
      ->capture_default_str();
  app.add_option("--tokenizer", cfg.tokenizer, "none | pretoken | vocab:<path>")
      ->capture_default_str();

  auto& j = cfg.judge;
  app.add_option("--judge-url", j.endpoint_url, "Judge completions endpoint URL");
  app.add_option("--judge-model", j.model_name, "Judge model name");
  app.add_option("--judge-prompt", j.prompt_template, "Judge prompt template with {question}")
      ->capture_default_str();
  app.add_option("--positive-token", j.positive_token, "Judge token meaning difficult")
      ->capture_default_str();
  app.add_option("--negative-token", j.negative_token, "Judge token meaning easy")
      ->capture_default_str();
  app.add_option("--top-logprobs", j.top_logprobs, "Top logprobs requested")->capture_default_str();
  app.add_option("--floor-margin", j.floor_margin, "Floor below the lowest returned logprob")
      ->capture_default_str();
  app.add_option("--max-inflight", j.max_inflight, "Concurrent endpoint requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--timeout-ms", cfg.judge_timeout_ms, "Judge request timeout")
      ->capture_default_str();
  app.add_option("--retries", j.retries, "Retries per request")->capture_default_str();
  app.add_option("--backoff-ms", cfg.judge_backoff_ms, "Base backoff between retries")
      ->capture_default_str();
  app.add_option("--api-key-env", j.api_key_env, "Environment variable holding the auth token")
      ->capture_default_str();

  auto& sv = cfg.solve;
  app.add_option("--solve-url", sv.endpoint_url, "Base-model completions endpoint URL");
  app.add_option("--solve-model", sv.model_name, "Base model name");
  app.add_option("--solve-prompt", sv.prompt_template, "Solve prompt template with {question}")
      ->capture_default_str();
  app.add_option("--n-samples", sv.n_samples, "Samples per question")->capture_default_str();
  app.add_option("--temperature", sv.temperature, "Sampling temperature")->capture_default_str();
  app.add_option("--max-output-tokens", sv.max_output_tokens, "Max tokens per solution")
      ->capture_default_str();
  app.add_option("--hard-threshold", sv.hard_threshold, "Hard iff solved fraction <= this")
      ->capture_default_str();
  app.add_option("--solve-timeout-ms", cfg.solve_timeout_ms, "Solve request timeout")
      ->capture_default_str();

  app.add_option("--strategy", cfg.strategy,
                 "joint | longest | middle | shortest | difficult | easy | random | diverse")
      ->capture_default_str();
  app.add_option("--k-fraction", cfg.k_fraction, "Subset size as a fraction of the pool")
      ->capture_default_str();
  app.add_option("--k-count", cfg.k_count, "Subset size as a count (overrides --k-fraction)");
  app.add_option("--w", cfg.w, "Joint ranker weight on difficulty")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Seed for random and diverse")->capture_default_str();
  app.add_option("--score-source", cfg.score_source, "judge | solve-rate")->capture_default_str();
  app.add_option("--sft-format", cfg.sft_format, "plain | conversational")->capture_default_str();
  app.add_option("--cache", cfg.cache, "Score cache file")->capture_default_str();
  app.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  app.add_option("--log-level", cfg.log_level, "quiet | info")->capture_default_str();
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Long chain-of-thought instruction selection toolkit", "cotsel"};
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  add_shared_options(app, cfg);

  std::string dedupe_mode = "id";
  auto* ingest = app.add_subcommand("ingest", "Validate, deduplicate and normalize a pool");
  ingest->add_option("--dedupe", dedupe_mode, "none | id | question-hash")->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "Per-record trace metrics table");

  std::string score_mode = "judge";
  bool rescore = false;
  auto* score = app.add_subcommand("score", "Difficulty scores into the cache");
  score->add_option("--mode", score_mode, "judge | solve-rate")->capture_default_str();
  score->add_flag("--rescore", rescore, "Ignore cached scores");

  auto* select = app.add_subcommand("select", "Rank, select and write the SFT subset");

  std::size_t n_bins = 5;
  std::string generations;
  std::vector<std::string> overlap;
  auto* stats = app.add_subcommand("stats", "Rethinking statistics and selection overlap");
  stats->add_option("--n-bins", n_bins, "Length quantile bins")->capture_default_str();
  stats->add_option("--generations", generations, "Generated solutions grouped by model");
  stats->add_option("--overlap", overlap, "Selection manifests to compare");

  std::string eval_file;
  std::size_t k = 0;
  auto* eval = app.add_subcommand("eval", "Pass@1 and Maj@k over sampled solutions");
  eval->add_option("--eval-file", eval_file, "Line-delimited eval samples");
  eval->add_option("--k", k, "Candidates used per problem (0 = all)")->capture_default_str();

  std::string labels;
  auto* emit = app.add_subcommand("emit-judge-data", "Judge training file from easy/hard labels");
  emit->add_option("--labels", labels, "Labels file from `score --mode solve-rate`");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  cfg.judge.timeout = std::chrono::milliseconds(cfg.judge_timeout_ms);
  cfg.judge.backoff_base = std::chrono::milliseconds(cfg.judge_backoff_ms);
  cfg.solve.timeout = std::chrono::milliseconds(cfg.solve_timeout_ms);
  cfg.solve.retries = cfg.judge.retries;
  cfg.solve.backoff_base = cfg.judge.backoff_base;
  cfg.solve.max_inflight = cfg.judge.max_inflight;
  cfg.solve.api_key_env = cfg.judge.api_key_env;

  Session session(cfg, out, err);
  const std::string config_text = app.config_to_str(true, false);
  try {
    int code = kExitOk;
    std::string name;
    std::vector<std::string> inputs{cfg.pool, cfg.lexicon_path};
    if (*ingest) {
      name = "ingest";
      code = cmd_ingest(cfg, dedupe_mode, session);
    } else if (*analyze) {
      name = "analyze";
      code = cmd_analyze(cfg, session);
    } else if (*score) {
      name = "score";
      code = cmd_score(cfg, score_mode, rescore, session);
    } else if (*select) {
      name = "select";
      inputs.push_back(cfg.cache);
      code = cmd_select(cfg, session);
    } else if (*stats) {
      name = "stats";
      inputs.push_back(generations);
      inputs.insert(inputs.end(), overlap.begin(), overlap.end());
      code = cmd_stats(cfg, n_bins, generations, overlap, session);
    } else if (*eval) {
      name = "eval";
      inputs.push_back(eval_file);
      code = cmd_eval(cfg, eval_file, k, session);
    } else if (*emit) {
      name = "emit-judge-data";
      inputs.push_back(labels);
      code = cmd_emit_judge_data(cfg, labels, session);
    }
    session.write_run_manifest(name, config_text, inputs);
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace cotsel::cli
