#pragma once

// Think-tag parsing, step segmentation, rethinking-keyword counting and
// length measurement over reasoning traces. Everything here is a pure
// function of its inputs.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cotsel/error.hpp"
#include "cotsel/tokenizer.hpp"
#include "json.hpp"

namespace cotsel::trace {

inline constexpr std::string_view kDefaultOpenTag = "<think>";
inline constexpr std::string_view kDefaultCloseTag = "</think>";

struct ParsedResponse {
  std::optional<std::string> trace;
  std::string answer_section;
  bool malformed = false;
};

namespace detail {

inline std::size_t count_occurrences(std::string_view text,
                                     std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// Word characters for boundary checks are ASCII alphanumerics and '_'.
// Non-ASCII bytes count as boundaries so keywords in unsegmented scripts
// still match inside running text.
inline bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') ||
         (u >= 'A' && u <= 'Z') || u == '_';
}

inline std::string_view strip(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

// A response is well formed when it starts with exactly one open tag that is
// followed by exactly one close tag. Then raw == open + trace + close + answer.
// Anything else is reported as malformed with the whole text as the answer.
inline ParsedResponse parse_think_tags(std::string_view raw,
                                       std::string_view open = kDefaultOpenTag,
                                       std::string_view close = kDefaultCloseTag) {
  if (open.empty() || close.empty()) {
    throw ConfigError("think delimiters must be non-empty");
  }
  ParsedResponse out;
  const bool starts_open = raw.substr(0, open.size()) == open;
  const std::size_t close_pos =
      starts_open ? raw.find(close, open.size()) : std::string_view::npos;
  if (!starts_open || close_pos == std::string_view::npos ||
      detail::count_occurrences(raw, open) != 1 ||
      detail::count_occurrences(raw, close) != 1) {
    out.malformed = true;
    out.answer_section = std::string(raw);
    return out;
  }
  out.trace = std::string(raw.substr(open.size(), close_pos - open.size()));
  out.answer_section = std::string(raw.substr(close_pos + close.size()));
  return out;
}

inline std::string reconstruct_response(const std::optional<std::string>& trace,
                                        std::string_view answer_section,
                                        std::string_view open = kDefaultOpenTag,
                                        std::string_view close = kDefaultCloseTag) {
  if (!trace) return std::string(answer_section);
  std::string out;
  out.reserve(open.size() + trace->size() + close.size() + answer_section.size());
  out.append(open).append(*trace).append(close).append(answer_section);
  return out;
}

// Splits on blank lines (two or more newlines, optionally separated by
// horizontal whitespace). Steps are stripped and empty fragments dropped.
inline std::vector<std::string> segment_steps(std::string_view trace) {
  std::vector<std::string> steps;
  std::size_t start = 0;
  std::size_t i = 0;
  auto flush = [&](std::size_t end) {
    auto piece = detail::strip(trace.substr(start, end - start));
    if (!piece.empty()) steps.emplace_back(piece);
  };
  while (i < trace.size()) {
    if (trace[i] != '\n') {
      ++i;
      continue;
    }
    // Scan a run of newlines mixed with horizontal whitespace.
    std::size_t j = i;
    std::size_t newlines = 0;
    while (j < trace.size() && detail::is_space(trace[j])) {
      if (trace[j] == '\n') ++newlines;
      ++j;
    }
    if (newlines >= 2) {
      flush(i);
      start = j;
    }
    i = j;
  }
  flush(trace.size());
  return steps;
}

enum class MatchMode { kWordBoundary, kPrefixOfStep };

inline std::string_view to_string(MatchMode m) {
  return m == MatchMode::kWordBoundary ? "word-boundary" : "prefix-of-step";
}

inline MatchMode parse_match_mode(std::string_view s) {
  if (s == "word-boundary") return MatchMode::kWordBoundary;
  if (s == "prefix-of-step") return MatchMode::kPrefixOfStep;
  throw ConfigError("unknown match mode '" + std::string(s) +
                    "' (expected word-boundary or prefix-of-step)");
}

struct RethinkLexicon {
  std::vector<std::string> keywords{"Wait", "Alternatively", "Maybe", "However"};
  MatchMode match_mode = MatchMode::kWordBoundary;

  void validate() const {
    if (keywords.empty()) throw ConfigError("lexicon has no keywords");
    for (std::size_t i = 0; i < keywords.size(); ++i) {
      if (keywords[i].empty()) throw ConfigError("lexicon keyword is empty");
      for (std::size_t j = 0; j < i; ++j) {
        if (keywords[i] == keywords[j]) {
          throw ConfigError("duplicate lexicon keyword '" + keywords[i] + "'");
        }
      }
    }
  }
};

// Lexicon file: {"keywords": ["Wait", ...], "match_mode": "word-boundary"}.
inline RethinkLexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read lexicon file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("lexicon file " + path + ": " + e.what());
  }
  RethinkLexicon lex;
  if (!j.is_object() || !j.contains("keywords") || !j["keywords"].is_array()) {
    throw ConfigError("lexicon file " + path + " needs a \"keywords\" array");
  }
  lex.keywords.clear();
  for (const auto& k : j["keywords"]) {
    if (!k.is_string()) throw ConfigError("lexicon keywords must be strings");
    lex.keywords.push_back(k.get<std::string>());
  }
  if (j.contains("match_mode")) {
    lex.match_mode = parse_match_mode(j["match_mode"].get<std::string>());
  }
  lex.validate();
  return lex;
}

// Counts in lexicon order.
struct KeywordCounts {
  std::vector<std::pair<std::string, std::size_t>> entries;

  std::size_t at(std::string_view keyword) const {
    for (const auto& [k, n] : entries) {
      if (k == keyword) return n;
    }
    throw std::out_of_range("keyword not in lexicon: " + std::string(keyword));
  }

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& e : entries) t += e.second;
    return t;
  }

  static KeywordCounts zeros(const RethinkLexicon& lex) {
    KeywordCounts c;
    for (const auto& k : lex.keywords) c.entries.emplace_back(k, 0);
    return c;
  }

  bool operator==(const KeywordCounts&) const = default;
};

namespace detail {

inline bool boundary_ok(std::string_view text, std::size_t pos,
                        std::string_view keyword) {
  if (is_word_char(keyword.front()) && pos > 0 && is_word_char(text[pos - 1])) {
    return false;
  }
  const std::size_t end = pos + keyword.size();
  if (is_word_char(keyword.back()) && end < text.size() &&
      is_word_char(text[end])) {
    return false;
  }
  return true;
}

inline std::size_t count_whole_word(std::string_view text,
                                    std::string_view keyword) {
  std::size_t n = 0;
  std::size_t pos = text.find(keyword);
  while (pos != std::string_view::npos) {
    if (boundary_ok(text, pos, keyword)) {
      ++n;
      pos = text.find(keyword, pos + keyword.size());
    } else {
      pos = text.find(keyword, pos + 1);
    }
  }
  return n;
}

inline bool starts_with_word(std::string_view step, std::string_view keyword) {
  return step.substr(0, keyword.size()) == keyword &&
         boundary_ok(step, 0, keyword);
}

}  // namespace detail

// Steps whose first word is the keyword.
inline KeywordCounts count_step_initial(const std::vector<std::string>& steps,
                                        const RethinkLexicon& lexicon) {
  auto counts = KeywordCounts::zeros(lexicon);
  for (const auto& step : steps) {
    for (auto& [kw, n] : counts.entries) {
      if (detail::starts_with_word(step, kw)) ++n;
    }
  }
  return counts;
}

inline KeywordCounts count_rethinking(std::string_view trace,
                                      const RethinkLexicon& lexicon) {
  if (lexicon.match_mode == MatchMode::kPrefixOfStep) {
    return count_step_initial(segment_steps(trace), lexicon);
  }
  auto counts = KeywordCounts::zeros(lexicon);
  for (auto& [kw, n] : counts.entries) n = detail::count_whole_word(trace, kw);
  return counts;
}

enum class LengthUnit { kChars, kWords, kTokens };

inline std::string_view to_string(LengthUnit u) {
  switch (u) {
    case LengthUnit::kChars: return "chars";
    case LengthUnit::kWords: return "words";
    case LengthUnit::kTokens: return "tokens";
  }
  return "?";
}

inline LengthUnit parse_length_unit(std::string_view s) {
  if (s == "chars") return LengthUnit::kChars;
  if (s == "words") return LengthUnit::kWords;
  if (s == "tokens") return LengthUnit::kTokens;
  throw ConfigError("unknown length unit '" + std::string(s) +
                    "' (expected chars, words or tokens)");
}

inline std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = detail::is_space(c);
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

inline std::size_t count_code_points(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

// chars counts UTF-8 code points.
inline std::size_t measure_length(std::string_view text, LengthUnit unit,
                                  const Segmenter* segmenter = nullptr) {
  switch (unit) {
    case LengthUnit::kChars:
      return count_code_points(text);
    case LengthUnit::kWords:
      return count_words(text);
    case LengthUnit::kTokens:
      if (segmenter == nullptr) {
        throw ConfigError("length unit 'tokens' requires a tokenizer");
      }
      return segmenter->count(text);
  }
  return 0;
}

inline std::size_t measure_trace(const std::optional<std::string>& trace,
                                 LengthUnit unit,
                                 const Segmenter* segmenter = nullptr) {
  if (unit == LengthUnit::kTokens && segmenter == nullptr) {
    throw ConfigError("length unit 'tokens' requires a tokenizer");
  }
  // Whitespace-only traces are empty constructs and measure as zero.
  if (!trace || detail::strip(*trace).empty()) return 0;
  return measure_length(std::string_view(*trace), unit, segmenter);
}

}  // namespace cotsel::trace
