// Copyright 2026 The conlink Authors
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

#pragma once

// Surface-string preprocessing shared by dictionary names and mentions:
// case folding, punctuation removal and composite-mention splitting.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace conlink {

namespace detail {

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

// Decodes one code point starting at s[i] and advances i. Malformed
// sequences yield U+FFFD and consume a single byte.
inline char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xe0) == 0xc0) {
    len = 2;
    cp = b0 & 0x1f;
  } else if ((b0 & 0xf0) == 0xe0) {
    len = 3;
    cp = b0 & 0x0f;
  } else if ((b0 & 0xf8) == 0xf0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xfffd;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xfffd;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xc0) != 0x80) {
      ++i;
      return 0xfffd;
    }
    cp = (cp << 6) | (b & 0x3f);
  }
  static constexpr std::array<char32_t, 5> kMinForLen{0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMinForLen[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
    ++i;
    return 0xfffd;
  }
  i += len;
  return cp;
}

// Punctuation, symbols, whitespace and control characters. Letters and
// digits of any script are kept.
inline bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    const bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    return !alnum;
  }
  if (cp < 0xc0) return cp != 0xaa && cp != 0xb5 && cp != 0xba;  // Latin-1 symbols; keep ª µ º
  if (cp == 0xd7 || cp == 0xf7) return true;                      // × ÷
  if (cp >= 0x2000 && cp <= 0x2bff) return true;                  // general punctuation .. misc symbols
  if (cp >= 0x3000 && cp <= 0x303f) return true;                  // CJK punctuation
  if (cp >= 0xfe30 && cp <= 0xfe4f) return true;
  if (cp >= 0xff00 && cp <= 0xff0f) return true;
  return cp == 0xfffd || cp == 0xfeff;
}

inline char32_t fold_case(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 0x20;
  if (cp >= 0x391 && cp <= 0x3a9 && cp != 0x3a2) return cp + 0x20;  // Greek capitals
  return cp;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

/// Lowercases, replaces every punctuation or symbol character with a space,
/// collapses whitespace runs and trims. May return an empty string.
inline std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = detail::next_code_point(text, i);
    if (detail::is_separator(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    detail::append_utf8(out, detail::fold_case(cp));
  }
  return out;
}

inline std::string trim(std::string_view s) {
  const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_ws(s[b])) ++b;
  while (e > b && is_ws(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

/// Splits a mention denoting several concepts ("combination of a + b") into
/// its parts. Triggers are the words combination, combine, combined, plus,
/// vs and the "+" sign, which also splits inside a token. Connectives (of,
/// and, with) touching a trigger are dropped. Text without a trigger comes
/// back unchanged as a single element.
inline std::vector<std::string> split_composite(std::string_view text) {
  static constexpr std::array<std::string_view, 5> kTriggerWords{"combination", "combine", "combined", "plus", "vs"};
  static constexpr std::array<std::string_view, 3> kConnectives{"of", "and", "with"};

  struct Token {
    std::string text;
    bool trigger;
  };
  std::vector<Token> tokens;
  bool any_trigger = false;
  for (std::string_view raw : detail::split_ws(text)) {
    std::size_t start = 0;
    while (true) {
      const std::size_t plus = raw.find('+', start);
      std::string_view piece = raw.substr(start, plus == std::string_view::npos ? raw.npos : plus - start);
      if (!piece.empty()) {
        const std::string folded = normalize(piece);
        const bool is_trigger = std::find(kTriggerWords.begin(), kTriggerWords.end(), folded) != kTriggerWords.end();
        any_trigger |= is_trigger;
        tokens.push_back({std::string(piece), is_trigger});
      }
      if (plus == std::string_view::npos) break;
      tokens.push_back({"+", true});
      any_trigger = true;
      start = plus + 1;
    }
  }
  if (!any_trigger) return {std::string(text)};

  const auto is_connective = [&](const Token& t) {
    const std::string folded = normalize(t.text);
    return std::find(kConnectives.begin(), kConnectives.end(), folded) != kConnectives.end();
  };

  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t j = i;
    while (j < tokens.size() && !tokens[j].trigger) ++j;
    // Segment [i, j); trim connectives at edges adjacent to a trigger.
    std::size_t b = i, e = j;
    const bool trigger_before = i > 0;
    const bool trigger_after = j < tokens.size();
    if (trigger_before)
      while (b < e && is_connective(tokens[b])) ++b;
    if (trigger_after)
      while (e > b && is_connective(tokens[e - 1])) --e;
    std::string part;
    for (std::size_t k = b; k < e; ++k) {
      if (!part.empty()) part.push_back(' ');
      part += tokens[k].text;
    }
    if (!part.empty()) parts.push_back(std::move(part));
    i = j + 1;
  }
  return parts;
}

}  // namespace conlink
