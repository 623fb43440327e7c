#pragma once

// Rule-based answer checking: \boxed{} extraction, a fixed list of
// normalization rules, numeric comparison and Pass@1 / Maj@k scoring.
//
// Normalization rules, applied repeatedly until the text stops changing:
//   - strip math delimiters ($, \( \), \[ \]) and surrounding whitespace
//   - drop sizing/spacing markup (\left \right \big.. \displaystyle \, \; \: \! \quad ~)
//   - unwrap \text{} \textbf{} \textit{} \mathrm{} \mathbf{} \mbox{}
//   - drop degree marks (^\circ, ^{\circ}, \circ) and trailing unit words
//   - \dfrac / \tfrac -> \frac, then \frac{a}{b} -> a/b (parenthesized when
//     an operand is not a plain atom), \sqrtX -> \sqrt{X}
//   - remove all whitespace, trailing . , ; : ! and a trailing percent sign
//   - strip one redundant outer brace pair and a leading "x=" assignment
//   - drop a leading '+', map U+2212 to '-', remove thousands separators
//   - canonical numerals: no leading zeros, no trailing fractional zeros,
//     "-0" -> "0"
// Symbolic equivalence is not attempted: "x+1" and "1+x" differ.

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cotsel/corpus.hpp"
#include "cotsel/error.hpp"
#include "json.hpp"

namespace cotsel::verifier {

struct Number {
  // Integers and integer fractions are exact; decimals are not.
  bool exact = false;
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value = 0.0;
};

enum class AnswerKind { kNumeric, kSymbolic, kMissing };

struct ExtractedAnswer {
  std::string raw;
  std::string canonical;
  std::optional<Number> numeric;
  AnswerKind kind = AnswerKind::kMissing;
  // \boxed{ was never closed; raw runs to the end of the text.
  bool unbalanced = false;
};

inline const std::vector<std::string>& default_unit_words() {
  static const std::vector<std::string> kUnits = {
      "cm", "km", "mm", "meters", "meter", "metres", "inches", "inch",
      "feet", "foot", "ft", "units", "unit", "dollars", "dollar", "cents",
      "cent", "hours", "hour", "minutes", "minute", "seconds", "second",
      "days", "day", "degrees", "degree", "mph", "kg", "grams", "gram",
      "pounds", "liters", "litres", "square"};
  return kUnits;
}

namespace detail {

inline bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  if (from.empty()) return;
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Removes a control word only when it is not the prefix of a longer one,
// so "\right" goes but "\rightarrow" stays.
inline void remove_macro(std::string& s, std::string_view macro) {
  std::size_t pos = s.find(macro);
  while (pos != std::string::npos) {
    const std::size_t end = pos + macro.size();
    if (end < s.size() && is_alpha(s[end]) && is_alpha(macro.back())) {
      pos = s.find(macro, pos + 1);
      continue;
    }
    s.erase(pos, macro.size());
    pos = s.find(macro, pos);
  }
}

// Index one past the brace matching s[open] == '{', or npos. Escaped
// braces (\{ \}) are skipped.
inline std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

inline void unwrap_command(std::string& s, std::string_view cmd) {
  std::size_t pos = s.find(cmd);
  while (pos != std::string::npos) {
    std::size_t brace = pos + cmd.size();
    while (brace < s.size() && s[brace] == ' ') ++brace;
    if (brace >= s.size() || s[brace] != '{') {
      pos = s.find(cmd, pos + 1);
      continue;
    }
    const std::size_t end = match_brace(s, brace);
    if (end == std::string::npos) break;
    std::string inner = s.substr(brace + 1, end - brace - 2);
    s.replace(pos, end - pos, inner);
    pos = s.find(cmd, pos);
  }
}

// One argument of \frac: a braced group or a single character.
inline bool read_arg(std::string_view s, std::size_t& i, std::string& arg) {
  while (i < s.size() && s[i] == ' ') ++i;
  if (i >= s.size()) return false;
  if (s[i] == '{') {
    const std::size_t end = match_brace(s, i);
    if (end == std::string_view::npos) return false;
    arg = std::string(s.substr(i + 1, end - i - 2));
    i = end;
    return true;
  }
  if (s[i] == '\\' || s[i] == '}') return false;
  arg = std::string(1, s[i]);
  ++i;
  return true;
}

inline bool is_atom(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!(is_alpha(s[i]) || is_digit(s[i]) || s[i] == '.')) return false;
  }
  return true;
}

inline void rewrite_fracs(std::string& s) {
  std::size_t pos = s.find("\\frac");
  while (pos != std::string::npos) {
    std::size_t i = pos + 5;
    std::string a, b;
    if (!read_arg(s, i, a) || !read_arg(s, i, b)) {
      pos = s.find("\\frac", pos + 1);
      continue;
    }
    auto wrap = [](const std::string& x) {
      return is_atom(x) ? x : "(" + x + ")";
    };
    const std::string rep = wrap(trim(a)) + "/" + wrap(trim(b));
    s.replace(pos, i - pos, rep);
    pos = s.find("\\frac", pos);
  }
}

inline void brace_sqrt(std::string& s) {
  std::size_t pos = s.find("\\sqrt");
  while (pos != std::string::npos) {
    const std::size_t i = pos + 5;
    if (i < s.size() && s[i] != '{' && s[i] != '[' && !is_space(s[i]) &&
        s[i] != '\\') {
      s.replace(i, 1, std::string("{") + s[i] + "}");
    }
    pos = s.find("\\sqrt", pos + 1);
  }
}

inline void strip_units(std::string& s, const std::vector<std::string>& units) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::string t = trim(s);
    for (const auto& u : units) {
      if (t.size() <= u.size() || t.compare(t.size() - u.size(), u.size(), u) != 0) {
        continue;
      }
      const char before = t[t.size() - u.size() - 1];
      if (is_alpha(before) || before == '\\') continue;
      std::string rest = trim(std::string_view(t).substr(0, t.size() - u.size()));
      if (rest.empty()) continue;
      s = rest;
      changed = true;
      break;
    }
  }
}

inline bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return is_digit(c); });
}

// "1,234,567" and "1,234.5" lose their separators.
inline void strip_thousands(std::string& s) {
  std::string_view v = s;
  std::size_t start = (!v.empty() && v[0] == '-') ? 1 : 0;
  std::string_view body = v.substr(start);
  std::string_view frac;
  if (auto dot = body.find('.'); dot != std::string_view::npos) {
    frac = body.substr(dot + 1);
    body = body.substr(0, dot);
    if (!all_digits(frac)) return;
  }
  if (body.find(',') == std::string_view::npos) return;
  std::vector<std::string_view> groups;
  std::size_t p = 0;
  while (true) {
    auto c = body.find(',', p);
    groups.push_back(body.substr(p, c == std::string_view::npos ? body.npos : c - p));
    if (c == std::string_view::npos) break;
    p = c + 1;
  }
  if (groups.front().empty() || groups.front().size() > 3 || !all_digits(groups.front())) {
    return;
  }
  for (std::size_t g = 1; g < groups.size(); ++g) {
    if (groups[g].size() != 3 || !all_digits(groups[g])) return;
  }
  std::string out(v.substr(0, start));
  for (auto g : groups) out += g;
  if (s.find('.') != std::string::npos) out += "." + std::string(frac);
  s = out;
}

inline std::string canonical_integer(std::string_view digits, bool negative) {
  std::size_t nz = 0;
  while (nz + 1 < digits.size() && digits[nz] == '0') ++nz;
  std::string d(digits.substr(nz));
  if (d == "0") return "0";
  return negative ? "-" + d : d;
}

// Canonical spelling for plain integers and decimals; other text unchanged.
inline std::string canonical_numeral(const std::string& s) {
  std::string_view v = s;
  bool neg = false;
  if (!v.empty() && v[0] == '-') {
    neg = true;
    v.remove_prefix(1);
  }
  const auto dot = v.find('.');
  if (dot == std::string_view::npos) {
    if (!all_digits(v)) return s;
    return canonical_integer(v, neg);
  }
  std::string_view ip = v.substr(0, dot);
  std::string_view fp = v.substr(dot + 1);
  if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)) ||
      (ip.empty() && fp.empty())) {
    return s;
  }
  while (!fp.empty() && fp.back() == '0') fp.remove_suffix(1);
  std::string ipart = ip.empty() ? "0" : canonical_integer(ip, false);
  if (fp.empty()) return canonical_integer(ipart, neg);
  return (neg ? "-" : "") + ipart + "." + std::string(fp);
}

inline std::string normalize_pass(std::string s, const std::vector<std::string>& units) {
  s = trim(s);
  replace_all(s, "\xE2\x88\x92", "-");  // U+2212 minus sign
  for (std::string_view d : {"\\(", "\\)", "\\[", "\\]", "$"}) replace_all(s, d, "");
  for (std::string_view m :
       {"\\displaystyle", "\\left", "\\right", "\\bigl", "\\bigr", "\\Bigl",
        "\\Bigr", "\\big", "\\Big", "\\qquad", "\\quad"}) {
    remove_macro(s, m);
  }
  for (std::string_view m : {"\\!", "\\,", "\\;", "\\:", "\\ ", "~"}) replace_all(s, m, " ");
  for (std::string_view cmd :
       {"\\text", "\\textbf", "\\textit", "\\textrm", "\\mathrm", "\\mathbf", "\\mbox"}) {
    unwrap_command(s, cmd);
  }
  for (std::string_view deg : {"^{\\circ}", "^\\circ", "\\circ", "\xC2\xB0"}) {
    replace_all(s, deg, "");
  }
  replace_all(s, "\\%", "%");
  replace_all(s, "{,}", ",");
  strip_units(s, units);
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  rewrite_fracs(s);
  brace_sqrt(s);

  std::string compact;
  for (char c : s) {
    if (!is_space(c)) compact.push_back(c);
  }
  s = std::move(compact);
  while (!s.empty() && std::string_view(".,;:!").find(s.back()) != std::string_view::npos) {
    s.pop_back();
  }
  if (!s.empty() && s.back() == '%') s.pop_back();
  if (s.size() >= 2 && s.front() == '{' && match_brace(s, 0) == s.size()) {
    s = s.substr(1, s.size() - 2);
  }
  if (s.size() > 2 && is_alpha(s[0]) && s[1] == '=' &&
      s.find('=', 2) == std::string::npos) {
    s = s.substr(2);
  }
  while (!s.empty() && s.front() == '+') s.erase(0, 1);
  strip_thousands(s);
  return canonical_numeral(s);
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool looks_decimal(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-') ? 1 : 0;
  bool digits = false, dot = false, exp = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (is_digit(c)) {
      digits = true;
    } else if (c == '.' && !dot && !exp) {
      dot = true;
    } else if ((c == 'e' || c == 'E') && digits && !exp) {
      exp = true;
      digits = false;
      if (i + 1 < s.size() && (s[i + 1] == '-' || s[i + 1] == '+')) ++i;
    } else {
      return false;
    }
  }
  return digits;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!looks_decimal(s)) return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string str(s);
    double v = std::stod(str, &used);
    if (used != str.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<Number> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (auto i = parse_int(s)) {
    return Number{true, *i, 1, static_cast<double>(*i)};
  }
  if (auto slash = s.find('/'); slash != std::string_view::npos &&
                                s.find('/', slash + 1) == std::string_view::npos) {
    auto a = s.substr(0, slash);
    auto b = s.substr(slash + 1);
    auto ia = parse_int(a);
    auto ib = parse_int(b);
    if (ia && ib && *ib != 0) {
      std::int64_t num = *ia, den = *ib;
      if (den < 0) {
        if (num == INT64_MIN || den == INT64_MIN) return std::nullopt;
        num = -num;
        den = -den;
      }
      const std::int64_t g = std::gcd(num, den);
      if (g > 1) {
        num /= g;
        den /= g;
      }
      return Number{true, num, den, static_cast<double>(num) / static_cast<double>(den)};
    }
    auto da = parse_double(a);
    auto db = parse_double(b);
    if (da && db && *db != 0.0) return Number{false, 0, 1, *da / *db};
    return std::nullopt;
  }
  if (auto d = parse_double(s)) return Number{false, 0, 1, *d};
  return std::nullopt;
}

}  // namespace detail

inline std::string normalize_answer(std::string_view raw,
                                    const std::vector<std::string>& unit_words =
                                        default_unit_words()) {
  std::string cur(raw);
  for (int iter = 0; iter < 16; ++iter) {
    std::string next = detail::normalize_pass(cur, unit_words);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

inline ExtractedAnswer make_answer(std::string raw,
                                   const std::vector<std::string>& unit_words =
                                       default_unit_words()) {
  ExtractedAnswer a;
  a.canonical = normalize_answer(raw, unit_words);
  a.raw = std::move(raw);
  if (a.canonical.empty()) {
    a.kind = AnswerKind::kMissing;
    return a;
  }
  a.numeric = detail::parse_number(a.canonical);
  a.kind = a.numeric ? AnswerKind::kNumeric : AnswerKind::kSymbolic;
  return a;
}

inline ExtractedAnswer missing_answer() { return ExtractedAnswer{}; }

// Content of the last top-level \boxed{...} (or \fbox{...}) group.
inline ExtractedAnswer extract_boxed(std::string_view solution,
                                     const std::vector<std::string>& unit_words =
                                         default_unit_words()) {
  std::optional<std::string> last;
  bool unbalanced = false;
  std::size_t pos = 0;
  while (pos < solution.size()) {
    std::size_t hit = std::string_view::npos;
    std::size_t macro_len = 0;
    for (std::string_view m : {"\\boxed", "\\fbox"}) {
      auto p = solution.find(m, pos);
      if (p < hit) {
        hit = p;
        macro_len = m.size();
      }
    }
    if (hit == std::string_view::npos) break;
    std::size_t brace = hit + macro_len;
    while (brace < solution.size() && detail::is_space(solution[brace])) ++brace;
    if (brace >= solution.size() || solution[brace] != '{') {
      pos = hit + macro_len;
      continue;
    }
    const std::size_t end = detail::match_brace(solution, brace);
    if (end == std::string_view::npos) {
      last = std::string(solution.substr(brace + 1));
      unbalanced = true;
      break;
    }
    last = std::string(solution.substr(brace + 1, end - brace - 2));
    unbalanced = false;
    pos = end;
  }
  if (!last) return missing_answer();
  auto a = make_answer(std::move(*last), unit_words);
  a.unbalanced = unbalanced;
  return a;
}

// Gold answers may be plain text or carry their own \boxed{}.
inline ExtractedAnswer gold_answer(std::string_view gold,
                                   const std::vector<std::string>& unit_words =
                                       default_unit_words()) {
  if (gold.find("\\boxed") != std::string_view::npos) {
    auto a = extract_boxed(gold, unit_words);
    if (a.kind != AnswerKind::kMissing) return a;
  }
  return make_answer(std::string(gold), unit_words);
}

inline constexpr double kDefaultRelTol = 1e-6;

inline bool answers_equal(const ExtractedAnswer& a, const ExtractedAnswer& b,
                          double rel_tol = kDefaultRelTol) {
  if (a.kind == AnswerKind::kMissing || b.kind == AnswerKind::kMissing) return false;
  if (a.numeric && b.numeric) {
    const Number& x = *a.numeric;
    const Number& y = *b.numeric;
    if (x.exact && y.exact) {
      return static_cast<__int128>(x.num) * y.den ==
             static_cast<__int128>(y.num) * x.den;
    }
    if (x.value == y.value) return true;
    return std::fabs(x.value - y.value) <=
           rel_tol * std::max(std::fabs(x.value), std::fabs(y.value));
  }
  return a.canonical == b.canonical;
}

struct EvalSample {
  std::string problem_id;
  ExtractedAnswer gold;
  std::vector<ExtractedAnswer> candidates;
};

struct Verdict {
  double pass_at_1 = 0.0;
  bool maj_at_k = false;
  std::string majority_answer;
  std::size_t k = 0;
  std::size_t correct = 0;
};

// Pass@1 is the mean correctness of the first k candidates. The vote groups
// non-missing candidates by canonical text; ties go to the group that
// appeared first.
inline Verdict score_sample(const EvalSample& sample, std::size_t k,
                            double rel_tol = kDefaultRelTol) {
  if (sample.candidates.empty()) {
    throw MetricError("problem " + sample.problem_id + " has no candidates");
  }
  if (k < 1 || k > sample.candidates.size()) {
    throw MetricError("k=" + std::to_string(k) + " outside 1.." +
                      std::to_string(sample.candidates.size()) + " for problem " +
                      sample.problem_id);
  }
  Verdict v;
  v.k = k;
  struct Group {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Group> votes;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = sample.candidates[i];
    if (answers_equal(c, sample.gold, rel_tol)) ++v.correct;
    if (c.kind == AnswerKind::kMissing) continue;
    auto [it, inserted] = votes.try_emplace(c.canonical, Group{0, i});
    ++it->second.count;
  }
  v.pass_at_1 = static_cast<double>(v.correct) / static_cast<double>(k);
  const Group* best = nullptr;
  for (const auto& [canon, g] : votes) {
    if (best == nullptr || g.count > best->count ||
        (g.count == best->count && g.first < best->first)) {
      best = &g;
    }
  }
  if (best != nullptr) {
    const auto& rep = sample.candidates[best->first];
    v.majority_answer = rep.canonical;
    v.maj_at_k = answers_equal(rep, sample.gold, rel_tol);
  }
  return v;
}

// nullopt when the record has no gold answer.
inline std::optional<bool> label_correctness(const corpus::InstructionRecord& record,
                                             double rel_tol = kDefaultRelTol) {
  if (!record.gold_answer) return std::nullopt;
  return answers_equal(extract_boxed(record.answer_section), gold_answer(*record.gold_answer),
                       rel_tol);
}

struct EvalFile {
  std::vector<EvalSample> samples;
  std::size_t skipped = 0;
};

// Lines of {"problem_id": ..., "gold": ..., "solutions": [text, ...]}.
inline EvalFile read_eval_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read eval file " + path);
  EvalFile out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      ++out.skipped;
      continue;
    }
    if (!j.is_object() || !j.contains("gold") || !j.contains("solutions") ||
        !j["solutions"].is_array()) {
      ++out.skipped;
      continue;
    }
    EvalSample s;
    s.problem_id = j.contains("problem_id")
                       ? (j["problem_id"].is_string() ? j["problem_id"].get<std::string>()
                                                      : j["problem_id"].dump())
                       : "line" + std::to_string(line_no);
    s.gold = gold_answer(j["gold"].is_string() ? j["gold"].get<std::string>()
                                               : j["gold"].dump());
    for (const auto& sol : j["solutions"]) {
      s.candidates.push_back(sol.is_string() ? extract_boxed(sol.get<std::string>())
                                             : missing_answer());
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace cotsel::verifier
