#pragma once

// Pluggable token segmenters used when trace length is measured in tokens.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>

#include "cotsel/error.hpp"

namespace cotsel {

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::size_t count(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

namespace detail {

inline bool pt_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}
inline bool pt_digit(unsigned char c) { return c >= '0' && c <= '9'; }
// Non-ASCII bytes are treated as letters.
inline bool pt_letter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

// Calls emit(piece) for each pre-token, following the byte-level BPE
// pre-tokenization pattern:
//   's|'t|'re|'ve|'m|'ll|'d| ?L+| ?N+| ?[^\sLN]+|\s+(?!\S)|\s+
template <class Emit>
void pretokenize(std::string_view s, Emit&& emit) {
  auto at = [&](std::size_t i) -> unsigned char {
    return i < s.size() ? static_cast<unsigned char>(s[i]) : 0;
  };
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t start = i;
    const unsigned char c = at(i);
    if (c == '\'') {
      const unsigned char n1 = at(i + 1);
      const unsigned char n2 = at(i + 2);
      if (n1 == 's' || n1 == 't' || n1 == 'm' || n1 == 'd') {
        emit(s.substr(i, 2));
        i += 2;
        continue;
      }
      if ((n1 == 'r' && n2 == 'e') || (n1 == 'v' && n2 == 'e') ||
          (n1 == 'l' && n2 == 'l')) {
        emit(s.substr(i, 3));
        i += 3;
        continue;
      }
    }
    std::size_t j = i;
    if (c == ' ' && i + 1 < s.size() && !pt_space(at(i + 1))) ++j;
    const unsigned char head = at(j);
    if (!pt_space(head) && j < s.size()) {
      if (pt_letter(head)) {
        while (j < s.size() && pt_letter(at(j))) ++j;
      } else if (pt_digit(head)) {
        while (j < s.size() && pt_digit(at(j))) ++j;
      } else {
        while (j < s.size() && !pt_space(at(j)) && !pt_letter(at(j)) &&
               !pt_digit(at(j))) {
          ++j;
        }
      }
      emit(s.substr(start, j - start));
      i = j;
      continue;
    }
    // Whitespace run. If non-space follows, leave the last char to it.
    j = i;
    while (j < s.size() && pt_space(at(j))) ++j;
    if (j < s.size() && j - i > 1) --j;
    emit(s.substr(start, j - start));
    i = j;
  }
}

inline std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace detail

// Counts pre-tokens; a vocabulary-free stand-in for a subword tokenizer.
class PretokenSegmenter final : public Segmenter {
 public:
  std::size_t count(std::string_view text) const override {
    std::size_t n = 0;
    detail::pretokenize(text, [&](std::string_view) { ++n; });
    return n;
  }
  std::string name() const override { return "pretoken"; }
};

// Greedy longest-match over a vocabulary file (one literal token per line)
// inside each pre-token; unknown code points cost one token each.
class VocabSegmenter final : public Segmenter {
 public:
  explicit VocabSegmenter(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read vocabulary file " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      max_len_ = std::max(max_len_, line.size());
      vocab_.insert(std::move(line));
    }
    if (vocab_.empty()) throw ConfigError("vocabulary file " + path + " is empty");
  }

  std::size_t count(std::string_view text) const override {
    std::size_t n = 0;
    detail::pretokenize(text, [&](std::string_view piece) {
      std::size_t i = 0;
      while (i < piece.size()) {
        std::size_t best = 0;
        for (std::size_t len = std::min(max_len_, piece.size() - i); len > 0; --len) {
          if (vocab_.count(std::string(piece.substr(i, len)))) {
            best = len;
            break;
          }
        }
        if (best == 0) {
          best = std::min(detail::utf8_len(static_cast<unsigned char>(piece[i])),
                          piece.size() - i);
        }
        i += best;
        ++n;
      }
    });
    return n;
  }
  std::string name() const override { return "vocab:" + path_; }

 private:
  std::string path_;
  std::unordered_set<std::string> vocab_;
  std::size_t max_len_ = 0;
};

// "none" yields nullptr; "pretoken"; "vocab:<path>".
inline std::unique_ptr<Segmenter> make_segmenter(std::string_view spec) {
  if (spec.empty() || spec == "none") return nullptr;
  if (spec == "pretoken") return std::make_unique<PretokenSegmenter>();
  if (spec.substr(0, 6) == "vocab:") {
    return std::make_unique<VocabSegmenter>(std::string(spec.substr(6)));
  }
  throw ConfigError("unknown tokenizer '" + std::string(spec) +
                    "' (expected none, pretoken or vocab:<path>)");
}

}  // namespace cotsel
