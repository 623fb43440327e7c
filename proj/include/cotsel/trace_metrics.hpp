#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cotsel/corpus.hpp"
#include "cotsel/trace.hpp"

namespace cotsel::trace {

struct TraceMetrics {
  std::string record_id;
  bool has_trace = false;
  bool malformed = false;
  std::size_t char_len = 0;
  std::size_t word_len = 0;
  std::size_t token_len = 0;
  std::size_t step_count = 0;
  // Counted under the lexicon's match mode.
  KeywordCounts keyword_counts;
  // Steps whose first word is the keyword, always reported.
  KeywordCounts step_initial_counts;
  std::size_t rethink_total = 0;
  double rethink_density = 0.0;

  std::size_t length(LengthUnit unit) const {
    switch (unit) {
      case LengthUnit::kChars: return char_len;
      case LengthUnit::kWords: return word_len;
      case LengthUnit::kTokens: return token_len;
    }
    return 0;
  }
};

// token_len stays 0 when no segmenter is given.
inline TraceMetrics compute_metrics(const corpus::InstructionRecord& record,
                                    const RethinkLexicon& lexicon,
                                    const Segmenter* segmenter = nullptr) {
  TraceMetrics m;
  m.record_id = record.id;
  m.malformed = record.malformed_tags;
  m.has_trace = record.trace.has_value();
  m.keyword_counts = KeywordCounts::zeros(lexicon);
  m.step_initial_counts = KeywordCounts::zeros(lexicon);
  // Whitespace-only traces are empty constructs and measure as zero.
  if (!record.trace || detail::strip(*record.trace).empty()) return m;
  const std::string& t = *record.trace;
  m.char_len = measure_length(t, LengthUnit::kChars);
  m.word_len = measure_length(t, LengthUnit::kWords);
  if (segmenter != nullptr) m.token_len = segmenter->count(t);
  const auto steps = segment_steps(t);
  m.step_count = steps.size();
  m.step_initial_counts = count_step_initial(steps, lexicon);
  m.keyword_counts = lexicon.match_mode == MatchMode::kPrefixOfStep
                         ? m.step_initial_counts
                         : count_rethinking(t, lexicon);
  m.rethink_total = m.keyword_counts.total();
  m.rethink_density = static_cast<double>(m.rethink_total) /
                      static_cast<double>(std::max<std::size_t>(m.step_count, 1));
  return m;
}

inline std::string metrics_header(const RethinkLexicon& lexicon) {
  std::string h =
      "id\thas_trace\tmalformed\tchar_len\tword_len\ttoken_len\tstep_count\t"
      "rethink_total\trethink_density";
  for (const auto& k : lexicon.keywords) h += "\tkw_" + k;
  for (const auto& k : lexicon.keywords) h += "\tstep_" + k;
  return h;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline std::string metrics_row(const TraceMetrics& m) {
  std::string row = m.record_id;
  auto add = [&](const std::string& s) { row.append("\t").append(s); };
  add(m.has_trace ? "1" : "0");
  add(m.malformed ? "1" : "0");
  add(std::to_string(m.char_len));
  add(std::to_string(m.word_len));
  add(std::to_string(m.token_len));
  add(std::to_string(m.step_count));
  add(std::to_string(m.rethink_total));
  add(format_double(m.rethink_density));
  for (const auto& e : m.keyword_counts.entries) add(std::to_string(e.second));
  for (const auto& e : m.step_initial_counts.entries) add(std::to_string(e.second));
  return row;
}

// Columnar export, one row per record id.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, const RethinkLexicon& lexicon)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write " + path);
    out_ << metrics_header(lexicon) << '\n';
  }
  void write(const TraceMetrics& m) {
    out_ << metrics_row(m) << '\n';
    ++rows_;
  }
  void close() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_);
  }
  std::size_t rows() const { return rows_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t rows_ = 0;
};

}  // namespace cotsel::trace
