#pragma once

// Streaming ingestion of line-delimited instruction pools, validation
// counters, deduplication and SFT-ready output.

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cotsel/error.hpp"
#include "cotsel/hash.hpp"
#include "cotsel/jsonl.hpp"
#include "cotsel/trace.hpp"
#include "json.hpp"

namespace cotsel::corpus {

struct InstructionRecord {
  std::string id;
  std::string question;
  std::string raw_response;
  std::optional<std::string> trace;
  std::string answer_section;
  std::optional<std::string> gold_answer;
  std::optional<std::string> category;
  std::string source;
  // Think tags absent or unbalanced; answer_section holds the whole response.
  bool malformed_tags = false;

  bool operator==(const InstructionRecord&) const = default;
};

// Field names may be nested paths: "a.b" descends into objects and
// "generations[0]" indexes arrays.
struct FieldMapping {
  std::string question_key = "question";
  std::string response_key = "response";
  std::string gold_key = "gold_answer";
  std::string category_key = "category";
  std::string id_key = "id";
  std::string source_key = "source";
  std::string think_open{trace::kDefaultOpenTag};
  std::string think_close{trace::kDefaultCloseTag};

  void validate() const {
    if (question_key.empty() || response_key.empty()) {
      throw ConfigError("question_key and response_key must be non-empty");
    }
    if (think_open.empty() || think_close.empty()) {
      throw ConfigError("think delimiters must be non-empty");
    }
    if (think_open == think_close) {
      throw ConfigError("think delimiters must differ");
    }
  }
};

inline std::string content_id(std::string_view question,
                              std::string_view raw_response) {
  return hash_fields(question, raw_response);
}

// Builds a record, parsing the response with the mapping's delimiters.
inline InstructionRecord make_record(std::string question, std::string raw_response,
                                     const FieldMapping& mapping = {},
                                     std::optional<std::string> id = std::nullopt) {
  InstructionRecord r;
  r.id = id && !id->empty() ? std::move(*id) : content_id(question, raw_response);
  auto parsed = trace::parse_think_tags(raw_response, mapping.think_open,
                                        mapping.think_close);
  r.trace = std::move(parsed.trace);
  r.answer_section = std::move(parsed.answer_section);
  r.malformed_tags = parsed.malformed;
  r.question = std::move(question);
  r.raw_response = std::move(raw_response);
  return r;
}

struct CorpusStats {
  std::size_t total = 0;
  std::size_t with_trace = 0;
  std::size_t empty_trace = 0;
  std::size_t missing_gold = 0;
  std::size_t duplicate_ids = 0;

  std::size_t without_trace() const { return total - with_trace; }
  bool operator==(const CorpusStats&) const = default;
};

namespace detail {

inline const nlohmann::json* resolve_path(const nlohmann::json& root,
                                          std::string_view path) {
  const nlohmann::json* cur = &root;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    std::size_t dot = path.find('.', pos);
    std::string_view seg =
        path.substr(pos, dot == std::string_view::npos ? path.size() - pos : dot - pos);
    std::string_view name = seg;
    std::vector<std::size_t> indices;
    if (auto br = seg.find('['); br != std::string_view::npos) {
      name = seg.substr(0, br);
      std::string_view rest = seg.substr(br);
      while (!rest.empty()) {
        auto close = rest.find(']');
        if (rest.front() != '[' || close == std::string_view::npos) return nullptr;
        try {
          indices.push_back(std::stoul(std::string(rest.substr(1, close - 1))));
        } catch (const std::exception&) {
          return nullptr;
        }
        rest = rest.substr(close + 1);
      }
    }
    if (!name.empty()) {
      if (!cur->is_object()) return nullptr;
      auto it = cur->find(std::string(name));
      if (it == cur->end()) return nullptr;
      cur = &*it;
    }
    for (auto idx : indices) {
      if (!cur->is_array() || idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    }
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return cur;
}

// Scalars become text; null and containers count as absent.
inline std::optional<std::string> scalar_text(const nlohmann::json* v) {
  if (v == nullptr || v->is_null() || v->is_object() || v->is_array()) {
    return std::nullopt;
  }
  if (v->is_string()) return v->get<std::string>();
  return v->dump();
}

}  // namespace detail

// Streams records from a line-delimited file in file order. Malformed lines
// are counted and skipped. When the stream ends without a single parseable
// record, next() throws SchemaError naming the first failure, unless the
// reader was created with allow_empty and the file held no content at all.
class CorpusReader {
 public:
  CorpusReader(const std::string& path, FieldMapping mapping,
               bool allow_empty = false)
      : path_(path), mapping_(std::move(mapping)), allow_empty_(allow_empty),
        in_(path, std::ios::binary) {
    mapping_.validate();
    if (!in_) throw IoError("cannot read pool file " + path);
    default_source_ = path;
    if (auto slash = default_source_.find_last_of('/'); slash != std::string::npos) {
      default_source_ = default_source_.substr(slash + 1);
    }
  }

  std::optional<InstructionRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trace::detail::strip(line).empty()) continue;
      if (auto rec = parse_line(line)) {
        ++records_;
        return rec;
      }
      ++skipped_;
    }
    if (in_.bad()) throw IoError("read failed: " + path_);
    if (records_ == 0 && !(allow_empty_ && skipped_ == 0)) {
      throw SchemaError("no parseable records in " + path_ +
                        (first_failure_.empty() ? std::string(" (file is empty)")
                                                : "; first failure: " + first_failure_));
    }
    return std::nullopt;
  }

  template <class Fn>
  void for_each(Fn&& fn) {
    while (auto rec = next()) fn(std::move(*rec));
  }

  std::size_t records() const { return records_; }
  std::size_t skipped() const { return skipped_; }
  const std::string& first_failure() const { return first_failure_; }

 private:
  void fail(const std::string& why) {
    if (first_failure_.empty()) {
      first_failure_ = "line " + std::to_string(line_no_) + ": " + why;
    }
  }

  std::optional<InstructionRecord> parse_line(const std::string& line) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      fail("invalid JSON");
      return std::nullopt;
    }
    if (!j.is_object()) {
      fail("not a JSON object");
      return std::nullopt;
    }
    const auto* q = detail::resolve_path(j, mapping_.question_key);
    if (q == nullptr || !q->is_string()) {
      fail("question_key '" + mapping_.question_key + "' missing or not a string");
      return std::nullopt;
    }
    const auto* r = detail::resolve_path(j, mapping_.response_key);
    if (r == nullptr || !r->is_string()) {
      fail("response_key '" + mapping_.response_key + "' missing or not a string");
      return std::nullopt;
    }
    std::optional<std::string> id;
    if (!mapping_.id_key.empty()) {
      id = detail::scalar_text(detail::resolve_path(j, mapping_.id_key));
    }
    auto rec = make_record(q->get<std::string>(), r->get<std::string>(), mapping_,
                           std::move(id));
    if (!mapping_.gold_key.empty()) {
      rec.gold_answer = detail::scalar_text(detail::resolve_path(j, mapping_.gold_key));
    }
    if (!mapping_.category_key.empty()) {
      rec.category =
          detail::scalar_text(detail::resolve_path(j, mapping_.category_key));
    }
    std::optional<std::string> source;
    if (!mapping_.source_key.empty()) {
      source = detail::scalar_text(detail::resolve_path(j, mapping_.source_key));
    }
    rec.source = source ? *source : default_source_;
    return rec;
  }

  std::string path_;
  FieldMapping mapping_;
  bool allow_empty_;
  std::ifstream in_;
  std::string default_source_;
  std::size_t line_no_ = 0;
  std::size_t records_ = 0;
  std::size_t skipped_ = 0;
  std::string first_failure_;
};

inline CorpusReader load_corpus(const std::string& path, FieldMapping mapping = {},
                                bool allow_empty = false) {
  return CorpusReader(path, std::move(mapping), allow_empty);
}

struct LoadedPool {
  std::vector<InstructionRecord> records;
  std::size_t skipped = 0;
};

// Materializes a whole pool. Prefer CorpusReader for large inputs.
inline LoadedPool read_pool(const std::string& path, FieldMapping mapping = {},
                            bool allow_empty = false) {
  CorpusReader reader(path, std::move(mapping), allow_empty);
  LoadedPool pool;
  reader.for_each([&](InstructionRecord r) { pool.records.push_back(std::move(r)); });
  pool.skipped = reader.skipped();
  return pool;
}

// Incremental counterpart of validate_pool for streaming use.
class PoolValidator {
 public:
  void add(const InstructionRecord& r) {
    ++stats_.total;
    if (r.trace) {
      ++stats_.with_trace;
      if (trace::detail::strip(*r.trace).empty()) ++stats_.empty_trace;
    }
    if (!r.gold_answer || r.gold_answer->empty()) ++stats_.missing_gold;
    if (!seen_.insert(r.id).second) ++stats_.duplicate_ids;
  }

  const CorpusStats& stats() const { return stats_; }

 private:
  CorpusStats stats_;
  std::unordered_set<std::string> seen_;
};

template <class Range>
CorpusStats validate_pool(const Range& records) {
  PoolValidator v;
  for (const auto& r : records) v.add(r);
  return v.stats();
}

enum class DedupeKey { kId, kQuestionHash };

inline DedupeKey parse_dedupe_key(std::string_view s) {
  if (s == "id") return DedupeKey::kId;
  if (s == "question-hash" || s == "question") return DedupeKey::kQuestionHash;
  throw ConfigError("unknown dedupe key '" + std::string(s) +
                    "' (expected id or question-hash)");
}

// First occurrence wins.
class Deduper {
 public:
  explicit Deduper(DedupeKey key) : key_(key) {}

  bool admit(const InstructionRecord& r) {
    std::string k = key_ == DedupeKey::kId ? r.id : hash128(r.question);
    if (seen_.insert(std::move(k)).second) return true;
    ++removed_;
    return false;
  }

  std::size_t removed() const { return removed_; }

 private:
  DedupeKey key_;
  std::unordered_set<std::string> seen_;
  std::size_t removed_ = 0;
};

struct DedupeResult {
  std::vector<InstructionRecord> records;
  std::size_t removed = 0;
};

inline DedupeResult dedupe(std::vector<InstructionRecord> records, DedupeKey key) {
  Deduper d(key);
  DedupeResult out;
  out.records.reserve(records.size());
  for (auto& r : records) {
    if (d.admit(r)) out.records.push_back(std::move(r));
  }
  out.removed = d.removed();
  return out;
}

// Canonical pool line, readable back with the default FieldMapping.
inline nlohmann::ordered_json to_pool_json(const InstructionRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["question"] = r.question;
  j["response"] = r.raw_response;
  if (r.gold_answer) j["gold_answer"] = *r.gold_answer;
  if (r.category) j["category"] = *r.category;
  j["source"] = r.source;
  return j;
}

template <class Range>
std::size_t write_pool(const Range& records, const std::string& path) {
  JsonlWriter w(path);
  for (const auto& r : records) w.write(to_pool_json(r));
  w.close();
  return w.lines();
}

enum class SftFormat { kPlain, kConversational };

inline SftFormat parse_sft_format(std::string_view s) {
  if (s == "plain") return SftFormat::kPlain;
  if (s == "conversational") return SftFormat::kConversational;
  throw ConfigError("unknown SFT format '" + std::string(s) +
                    "' (expected plain or conversational)");
}

inline nlohmann::ordered_json sft_line(std::string_view question,
                                       std::string_view response, SftFormat format) {
  nlohmann::ordered_json j;
  if (format == SftFormat::kPlain) {
    j["question"] = question;
    j["response"] = response;
  } else {
    j["messages"] = nlohmann::ordered_json::array(
        {nlohmann::ordered_json{{"role", "user"}, {"content", question}},
         nlohmann::ordered_json{{"role", "assistant"}, {"content", response}}});
  }
  return j;
}

// One line per record; response = open + trace + close + answer_section.
template <class Range>
std::size_t write_sft_subset(const Range& records, SftFormat format,
                             const std::string& path,
                             std::string_view open = trace::kDefaultOpenTag,
                             std::string_view close = trace::kDefaultCloseTag) {
  for (const auto& r : records) {
    if (r.question.empty() || r.raw_response.empty()) {
      throw SchemaError("record " + r.id + " has an empty question or response");
    }
  }
  JsonlWriter w(path);
  for (const auto& r : records) {
    w.write(sft_line(r.question,
                     trace::reconstruct_response(r.trace, r.answer_section, open, close),
                     format));
  }
  w.close();
  return w.lines();
}

}  // namespace cotsel::corpus
