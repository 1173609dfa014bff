/**********************************************************************
 * File:        textnorm.hpp
 * Description: Ground-truth hygiene for Syriac text: diacritic removal,
 *              NFC + whitespace normalization and charset validation.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 **********************************************************************/

#pragma once

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ocrwb/utf8.hpp"

namespace ocrwb::textnorm {

/// Marks removed unconditionally: SYRIAC LETTER SUPERSCRIPT ALAPH and the
/// Syriac vowel/point block U+0730..U+074A.
inline bool is_syriac_mark(char32_t c) { return c == 0x0711 || (c >= 0x0730 && c <= 0x074A); }

inline bool is_syriac_letter(char32_t c) {
  return (c >= 0x0710 && c <= 0x072F && c != 0x0711) || (c >= 0x074D && c <= 0x074F) ||
         (c >= 0x0860 && c <= 0x086A);
}

inline bool is_nonspacing_mark(char32_t c) {
  return u_charType(static_cast<UChar32>(c)) == U_NON_SPACING_MARK;
}

inline bool is_control(char32_t c) {
  return u_charType(static_cast<UChar32>(c)) == U_CONTROL_CHAR;
}

inline bool is_whitespace(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

inline std::u32string nfc(std::u32string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::InvalidArgument, "ICU NFC unavailable");
  icu::UnicodeString src = icu::UnicodeString::fromUTF32(
      reinterpret_cast<const UChar32*>(s.data()), static_cast<int32_t>(s.size()));
  icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::InvalidArgument, "NFC normalization failed");
  std::u32string out(static_cast<std::size_t>(dst.countChar32()), U'\0');
  UErrorCode st2 = U_ZERO_ERROR;
  dst.toUTF32(reinterpret_cast<UChar32*>(out.data()), static_cast<int32_t>(out.size()), st2);
  return out;
}

/// Drops the Syriac vowel/point marks anywhere, and any other nonspacing
/// mark that sits on a Syriac letter. Base letters and their order are kept.
inline std::u32string strip_diacritics(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  bool on_syriac = false;
  for (char32_t c : s) {
    if (is_syriac_mark(c)) continue;
    if (is_nonspacing_mark(c)) {
      if (!on_syriac) out.push_back(c);
      continue;
    }
    on_syriac = is_syriac_letter(c);
    out.push_back(c);
  }
  return out;
}

inline std::string strip_diacritics(std::string_view s) {
  return utf8::encode(strip_diacritics(std::u32string_view(utf8::decode(s))));
}

/// Same steps as normalize_text, but an empty result is allowed. Used for
/// engine hypotheses, where an empty output is a legitimate answer.
inline std::string canonicalize(std::string_view s) {
  std::u32string visible;
  for (char32_t c : nfc(utf8::decode(s))) {
    if (!is_control(c) || is_whitespace(c)) visible.push_back(c);
  }
  const std::u32string text = nfc(strip_diacritics(std::u32string_view(visible)));
  std::u32string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : text) {
    if (is_whitespace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return utf8::encode(out);
}

/// A normalized single-line transcription. Only normalize_text creates one.
class GroundTruth {
 public:
  const std::string& text() const { return text_; }
  std::u32string codepoints() const { return utf8::decode(text_); }
  bool operator==(const GroundTruth&) const = default;

 private:
  explicit GroundTruth(std::string text) : text_(std::move(text)) {}
  friend GroundTruth normalize_text(std::string_view s);
  std::string text_;
};

/// NFC, diacritic stripping, whitespace unification/collapse/trim and
/// control-character removal.
inline GroundTruth normalize_text(std::string_view s) {
  std::string out = canonicalize(s);
  if (out.empty()) throw Error(ErrorCode::EmptyAfterNormalization, std::string(s));
  return GroundTruth(std::move(out));
}

/// Splits normalized text on spaces.
inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Permitted codepoints for ground truth. Space is always a member and
/// combining marks never are.
class Charset {
 public:
  static const std::u32string& default_punctuation() {
    static const std::u32string p = {U'.', U':', 0x0700, 0x0701, 0x0702};
    return p;
  }

  /// Syriac letters U+0710..U+072F (minus the superscript alaph), space and
  /// the given punctuation.
  static Charset syriac(std::u32string_view punctuation = default_punctuation()) {
    Charset cs;
    for (char32_t c = 0x0710; c <= 0x072F; ++c) cs.add(c);
    for (char32_t c : punctuation) cs.add(c);
    return cs;
  }

  Charset() { allowed_.insert(U' '); }

  /// Returns false (and ignores the request) for marks and controls.
  bool add(char32_t c) {
    if (is_syriac_mark(c) || is_nonspacing_mark(c) || is_control(c)) return false;
    allowed_.insert(c);
    return true;
  }

  bool contains(char32_t c) const { return allowed_.count(c) != 0; }
  const std::set<char32_t>& allowed() const { return allowed_; }

 private:
  std::set<char32_t> allowed_;
};

struct Violation {
  std::size_t position = 0;  // codepoint index
  char32_t codepoint = 0;
  bool operator==(const Violation&) const = default;
};

inline std::vector<Violation> validate_charset(const GroundTruth& g, const Charset& cs) {
  std::vector<Violation> out;
  const std::u32string cps = g.codepoints();
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (!cs.contains(cps[i])) out.push_back({i, cps[i]});
  }
  return out;
}

}  // namespace ocrwb::textnorm
