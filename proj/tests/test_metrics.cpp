/**********************************************************************
 * File:        test_metrics.cpp
 * Description: Alignment and CER/WER against independent edit-distance oracles.
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

#include <gtest/gtest.h>

#include <functional>
#include <map>

#include "ocrwb/metrics.hpp"
#include "test_util.hpp"

namespace ocrwb::metrics {
namespace {

// Memoized recursion over suffixes; shares nothing with the table DP.
std::size_t edit_distance_oracle(const std::u32string& a, const std::u32string& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = d(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, d(i + 1, j) + 1);
    best = std::min(best, d(i, j + 1) + 1);
    return memo[key] = best;
  };
  return d(0, 0);
}

std::u32string random_units(SplitMix64& rng, std::size_t alphabet, std::size_t max_len) {
  std::u32string s;
  const auto n = rng.below(max_len + 1);
  for (std::uint64_t i = 0; i < n; ++i) s.push_back(U'a' + static_cast<char32_t>(rng.below(alphabet)));
  return s;
}

// Replays the ops on ref and checks they produce hyp.
void expect_consistent(const Alignment& a, const std::u32string& ref, const std::u32string& hyp) {
  std::u32string out;
  std::size_t ri = 0, hi = 0;
  for (const auto& op : a.ops) {
    switch (op.op) {
      case EditOp::Match:
        ASSERT_EQ(ref[op.ref_pos], hyp[op.hyp_pos]);
        [[fallthrough]];
      case EditOp::Substitute:
        ASSERT_EQ(op.ref_pos, ri++);
        ASSERT_EQ(op.hyp_pos, hi++);
        out.push_back(hyp[op.hyp_pos]);
        break;
      case EditOp::Delete:
        ASSERT_EQ(op.ref_pos, ri++);
        break;
      case EditOp::Insert:
        ASSERT_EQ(op.hyp_pos, hi++);
        out.push_back(hyp[op.hyp_pos]);
        break;
    }
  }
  EXPECT_EQ(out, hyp);
  EXPECT_EQ(ri, ref.size());
  EXPECT_EQ(a.matches + a.substitutions + a.deletions, ref.size());
  EXPECT_EQ(a.matches + a.substitutions + a.insertions, hyp.size());
}

TEST(Align, Examples) {
  auto a = align(U"abc", U"abc");
  EXPECT_EQ(a.errors(), 0u);
  EXPECT_EQ(a.ref_length, 3u);
  a = align(U"abc", U"");
  EXPECT_EQ(a.deletions, 3u);
  EXPECT_EQ(a.substitutions + a.insertions, 0u);
  a = align(U"", U"");
  EXPECT_TRUE(a.ops.empty());
}

TEST(Align, MatchesOracleOnRandomPairs) {
  SplitMix64 rng(31);
  for (int i = 0; i < 1500; ++i) {
    const std::size_t alphabet = 1 + rng.below(8);
    const auto ref = random_units(rng, alphabet, 12);
    const auto hyp = random_units(rng, alphabet, 12);
    const Alignment a = align(ref, hyp);
    ASSERT_EQ(a.errors(), edit_distance_oracle(ref, hyp));
    expect_consistent(a, ref, hyp);
  }
}

TEST(Align, TieBreakPrefersSubstituteOverIndel) {
  // "ab" -> "ba": cost 2 either as two substitutions or delete+insert.
  const Alignment a = align(U"ab", U"ba");
  EXPECT_EQ(a.substitutions, 2u);
  EXPECT_EQ(a.deletions + a.insertions, 0u);
  // "abc" -> "ac": the deletion is found, not a substitution pair.
  const Alignment b = align(U"abc", U"ac");
  EXPECT_EQ(b.deletions, 1u);
  EXPECT_EQ(b.ops[1].op, EditOp::Delete);
}

TEST(Align, SymmetryTriangleAndPrefix) {
  SplitMix64 rng(32);
  for (int i = 0; i < 500; ++i) {
    const auto x = random_units(rng, 4, 10), y = random_units(rng, 4, 10), z = random_units(rng, 4, 10);
    const Alignment xy = align(x, y), yx = align(y, x);
    ASSERT_EQ(xy.errors(), yx.errors());
    ASSERT_EQ(xy.deletions + yx.deletions, xy.insertions + yx.insertions);
    ASSERT_EQ(xy.deletions + y.size(), xy.insertions + x.size());
    ASSERT_LE(align(x, z).errors(), xy.errors() + align(y, z).errors());
    const auto p = random_units(rng, 4, 6);
    ASSERT_EQ(align(p + x, p + y).errors(), xy.errors());
  }
}

TEST(Align, WordUnitsAreZeroOneOnSingleWords) {
  EXPECT_EQ(align_words("ܐܒ", "ܐܒ").errors(), 0u);
  EXPECT_EQ(align_words("ܐܒ", "ܐܓ").errors(), 1u);
}

TEST(ErrorRates, Examples) {
  EXPECT_NEAR(error_rates("abc", "axc").cer, 100.0 / 3, 1e-12);
  EXPECT_DOUBLE_EQ(error_rates("x", "a b c").wer, 300.0);
  EXPECT_DOUBLE_EQ(error_rates("ab", "ab").cer, 0.0);
}

TEST(ErrorRates, EmptyReferenceIsAnError) {
  try {
    error_rates("", "abc");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyReference);
  }
}

TEST(ErrorRates, HypothesisIsCanonicalized) {
  EXPECT_DOUBLE_EQ(error_rates("ܐ ܒ", "  ܐܰ\t ܒ \n").cer, 0.0);
}

TEST(ErrorRates, IgnoreSpacesOption) {
  RateOptions opt;
  opt.ignore_spaces = true;
  EXPECT_DOUBLE_EQ(error_rates("ab cd", "abcd", opt).cer, 0.0);
  EXPECT_DOUBLE_EQ(error_rates("ab cd", "abcd").cer, 20.0);
}

TEST(ErrorRates, SubstitutionRateRecovery) {
  SplitMix64 rng(33);
  for (double p : {0.05, 0.2}) {
    EditCounts pooled;
    for (int line = 0; line < 20; ++line) {
      std::u32string ref, hyp;
      for (int i = 0; i < 500; ++i) {
        const char32_t c = U'a' + static_cast<char32_t>(rng.below(8));
        ref.push_back(c);
        hyp.push_back(rng.bernoulli(p) ? U'A' + static_cast<char32_t>(rng.below(8)) : c);
      }
      const auto a = align(ref, hyp);
      pooled.substitutions += a.substitutions;
      pooled.deletions += a.deletions;
      pooled.insertions += a.insertions;
      pooled.ref_length += a.ref_length;
    }
    EXPECT_NEAR(pooled.rate(), 100 * p, 2.0);
  }
}

}  // namespace
}  // namespace ocrwb::metrics
