/**********************************************************************
 * File:        metrics.hpp
 * Description: Unit-cost edit alignment and CER/WER computation with
 *              explicit substitution/deletion/insertion counts.
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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocrwb/textnorm.hpp"

namespace ocrwb::metrics {

enum class EditOp : std::uint8_t { Match, Substitute, Delete, Insert };

inline constexpr std::string_view to_string(EditOp op) {
  switch (op) {
    case EditOp::Match: return "match";
    case EditOp::Substitute: return "substitute";
    case EditOp::Delete: return "delete";
    case EditOp::Insert: return "insert";
  }
  return "?";
}

/// One step of an alignment. Positions index into the reference and the
/// hypothesis; for Insert, ref_pos is the reference index the inserted unit
/// precedes, for Delete hyp_pos is the hypothesis index it precedes.
struct AlignedOp {
  EditOp op = EditOp::Match;
  std::size_t ref_pos = 0;
  std::size_t hyp_pos = 0;
  bool operator==(const AlignedOp&) const = default;
};

struct Alignment {
  std::vector<AlignedOp> ops;
  std::size_t matches = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_length = 0;  // N

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

/// Minimal unit-cost alignment of two sequences. On equal cost the
/// backtrace prefers Match, then Substitute, then Delete, then Insert.
template <typename T>
Alignment align(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  const std::size_t stride = m + 1;
  std::vector<std::uint32_t> dp((n + 1) * stride);
  for (std::size_t i = 0; i <= n; ++i) dp[i * stride] = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) dp[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = dp[(i - 1) * stride + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::uint32_t del = dp[(i - 1) * stride + j] + 1;
      const std::uint32_t ins = dp[i * stride + j - 1] + 1;
      dp[i * stride + j] = std::min({diag, del, ins});
    }
  }

  Alignment a;
  a.ref_length = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = dp[i * stride + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (dp[(i - 1) * stride + j - 1] + (same ? 0 : 1) == here) {
        a.ops.push_back({same ? EditOp::Match : EditOp::Substitute, i - 1, j - 1});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && dp[(i - 1) * stride + j] + 1 == here) {
      a.ops.push_back({EditOp::Delete, i - 1, j});
      --i;
      continue;
    }
    a.ops.push_back({EditOp::Insert, i, j - 1});
    --j;
  }
  std::reverse(a.ops.begin(), a.ops.end());
  for (const auto& op : a.ops) {
    switch (op.op) {
      case EditOp::Match: ++a.matches; break;
      case EditOp::Substitute: ++a.substitutions; break;
      case EditOp::Delete: ++a.deletions; break;
      case EditOp::Insert: ++a.insertions; break;
    }
  }
  return a;
}

template <typename T>
Alignment align(const std::vector<T>& ref, const std::vector<T>& hyp) {
  return align(std::span<const T>(ref), std::span<const T>(hyp));
}

inline Alignment align(std::u32string_view ref, std::u32string_view hyp) {
  return align(std::span<const char32_t>(ref.data(), ref.size()),
               std::span<const char32_t>(hyp.data(), hyp.size()));
}

/// Edit counts for one sample in one unit.
struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_length = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  /// (S + D + I) / N * 100; unclamped.
  double rate() const {
    if (ref_length == 0) throw Error(ErrorCode::EmptyReference, "reference length is zero");
    return 100.0 * static_cast<double>(errors()) / static_cast<double>(ref_length);
  }
  static EditCounts from(const Alignment& a) {
    return {a.substitutions, a.deletions, a.insertions, a.ref_length};
  }
};

struct ErrorRates {
  double cer = 0;
  double wer = 0;
  EditCounts chars;
  EditCounts words;
};

struct RateOptions {
  bool ignore_spaces = false;
};

inline std::u32string char_units(std::string_view text, const RateOptions& opt) {
  std::u32string cps = utf8::decode(text);
  if (opt.ignore_spaces) std::erase(cps, U' ');
  return cps;
}

inline Alignment align_chars(std::string_view ref, std::string_view hyp, const RateOptions& opt = {}) {
  return align(char_units(ref, opt), char_units(hyp, opt));
}

inline Alignment align_words(std::string_view ref, std::string_view hyp) {
  return align(textnorm::words(ref), textnorm::words(hyp));
}

/// CER over codepoints and WER over space-separated words. The hypothesis
/// is canonicalized the same way ground truth is.
inline ErrorRates error_rates(std::string_view reference, std::string_view hypothesis,
                              const RateOptions& opt = {}) {
  const std::string hyp = textnorm::canonicalize(hypothesis);
  ErrorRates r;
  r.chars = EditCounts::from(align_chars(reference, hyp, opt));
  r.words = EditCounts::from(align_words(reference, hyp));
  if (r.chars.ref_length == 0 || r.words.ref_length == 0) {
    throw Error(ErrorCode::EmptyReference, "reference has no units");
  }
  r.cer = r.chars.rate();
  r.wer = r.words.rate();
  return r;
}

inline ErrorRates error_rates(const textnorm::GroundTruth& reference, std::string_view hypothesis,
                              const RateOptions& opt = {}) {
  return error_rates(std::string_view(reference.text()), hypothesis, opt);
}

}  // namespace ocrwb::metrics
