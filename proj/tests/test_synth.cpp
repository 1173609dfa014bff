/**********************************************************************
 * File:        test_synth.cpp
 * Description: Synthetic line rendering and degradation.
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

#include <set>

#include "ocrwb/reference_engine.hpp"
#include "ocrwb/synth.hpp"
#include "ocrwb/metrics.hpp"

namespace ocrwb::synth {
namespace {

using textnorm::normalize_text;

TEST(Atlas, DefaultAtlasIsValidAndDistinct) {
  const GlyphAtlas atlas = default_atlas();
  EXPECT_NO_THROW(atlas.validate());
  EXPECT_EQ(atlas.glyphs.size(), 22u);
  std::set<std::vector<std::uint8_t>> bitmaps;
  for (const auto& [cp, g] : atlas.glyphs) {
    EXPECT_TRUE(textnorm::is_syriac_letter(cp));
    bitmaps.insert(std::vector<std::uint8_t>(g.pixels().begin(), g.pixels().end()));
  }
  EXPECT_EQ(bitmaps.size(), 22u);
  EXPECT_GT(atlas.inter_word_gap, atlas.inter_glyph_gap);
}

TEST(Atlas, EveryGlyphIsOneComponent) {
  for (const auto& [cp, g] : default_atlas().glyphs) {
    EXPECT_EQ(label_components(g).components.size(), 1u) << utf8::codepoint_label(cp);
  }
}

TEST(Render, SingleGlyphRightAligned) {
  const GlyphAtlas atlas = default_atlas();
  const RenderedLine line = render_line(normalize_text("ܐ"), atlas);
  ASSERT_EQ(line.glyph_boxes.size(), 1u);
  const Rect r = line.glyph_boxes[0].rect;
  EXPECT_EQ(r.right(), line.image.width() - RenderOptions{}.margin);
  const Raster& g = atlas.glyphs.at(U'ܐ');
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      ASSERT_EQ(line.image.at(r.x + x, r.y + y), g.at(x, y) ? 0 : 255);
    }
  }
  std::size_t ink = 0;
  for (auto v : line.image.pixels()) ink += v == 0;
  std::size_t glyph_ink = 0;
  for (auto v : g.pixels()) glyph_ink += v;
  EXPECT_EQ(ink, glyph_ink);
}

TEST(Render, RightToLeftAndWordGap) {
  const GlyphAtlas atlas = default_atlas();
  const RenderedLine line = render_line(normalize_text("ܐ ܒ"), atlas);
  ASSERT_EQ(line.glyph_boxes.size(), 2u);
  const Rect a = line.glyph_boxes[0].rect, b = line.glyph_boxes[1].rect;
  EXPECT_GE(a.x, b.right());
  EXPECT_EQ(a.x - b.right(), atlas.inter_word_gap);
  const RenderedLine tight = render_line(normalize_text("ܐܒ"), atlas);
  EXPECT_EQ(tight.glyph_boxes[0].rect.x - tight.glyph_boxes[1].rect.right(), atlas.inter_glyph_gap);
}

TEST(Render, MissingGlyph) {
  try {
    render_line(normalize_text("ܐA"), default_atlas());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingGlyph);
  }
}

TEST(Render, BoxesMatchTextAndDoNotOverlap) {
  const GlyphAtlas atlas = default_atlas();
  for (const auto& line : make_corpus(40, 9, atlas)) {
    std::size_t letters = 0;
    for (char32_t c : line.text.codepoints()) letters += c != U' ';
    ASSERT_EQ(line.glyph_boxes.size(), letters);
    for (std::size_t i = 0; i < line.glyph_boxes.size(); ++i) {
      for (std::size_t j = i + 1; j < line.glyph_boxes.size(); ++j) {
        ASSERT_FALSE(line.glyph_boxes[i].rect.intersects(line.glyph_boxes[j].rect));
      }
    }
    ASSERT_EQ(line.image.height(), 110);
  }
}

TEST(Render, WidthGrowsWithText) {
  const GlyphAtlas atlas = default_atlas();
  std::u32string text;
  int prev = 0;
  for (char32_t c : std::u32string(U"ܐܒܓ ܕܗ ܘ")) {
    text.push_back(c);
    if (c == U' ') continue;
    const int w = render_line(normalize_text(utf8::encode(text)), atlas).image.width();
    EXPECT_GT(w, prev);
    prev = w;
  }
}

TEST(Degrade, IdentityWithoutNoise) {
  const GlyphAtlas atlas = default_atlas();
  const auto line = make_corpus(1, 1, atlas)[0];
  EXPECT_EQ(degrade(line, {0, 1, 0, 5}, atlas), line);
}

TEST(Degrade, ForcedSubstitutionWithTwoGlyphAtlas) {
  GlyphAtlas atlas;
  atlas.glyphs.emplace(U'ܐ', detail::box_glyph(3));
  atlas.glyphs.emplace(U'ܒ', detail::box_glyph(5));
  const auto line = render_line(normalize_text("ܐ"), atlas);
  const auto out = degrade(line, {0, 1, 1.0, 77}, atlas);
  EXPECT_EQ(out.text.text(), "ܒ");
  ASSERT_EQ(out.glyph_boxes.size(), 1u);
  EXPECT_EQ(out.glyph_boxes[0].codepoint, U'ܒ');
  EXPECT_EQ(out, render_line(normalize_text("ܒ"), atlas));
}

TEST(Degrade, ReproducibleAndLengthPreserving) {
  const GlyphAtlas atlas = default_atlas();
  for (const auto& line : make_corpus(20, 4, atlas)) {
    const NoiseParams np{0.05, 3, 0.3, 1234};
    const auto a = degrade(line, np, atlas), b = degrade(line, np, atlas);
    ASSERT_EQ(a, b);
    ASSERT_EQ(a.text.codepoints().size(), line.text.codepoints().size());
    ASSERT_EQ(a.image.height(), line.image.height());
  }
}

TEST(Degrade, RejectsBadProbabilities) {
  const GlyphAtlas atlas = default_atlas();
  const auto line = make_corpus(1, 1, atlas)[0];
  EXPECT_THROW(degrade(line, {1.5, 1, 0, 0}, atlas), Error);
  EXPECT_THROW(degrade(line, {0, 1, -0.1, 0}, atlas), Error);
}

TEST(Degrade, OracleRecognizerRecoversCorruptionRate) {
  const GlyphAtlas atlas = default_atlas();
  const auto corpus = make_corpus(200, 100, atlas);
  metrics::EditCounts pooled;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto d = degrade(corpus[i], {0, 1, 0.2, 500 + i}, atlas);
    const auto a = metrics::align_chars(corpus[i].text.text(), d.text.text());
    pooled.substitutions += a.substitutions;
    pooled.deletions += a.deletions;
    pooled.insertions += a.insertions;
    pooled.ref_length += a.ref_length;
  }
  EXPECT_NEAR(pooled.rate(), 20.0, 2.0);
}

TEST(WordCorrupt, ReplacesWholeWords) {
  const GlyphAtlas atlas = default_atlas();
  const auto line = render_line(normalize_text("ܐܒ ܓܕ"), atlas);
  const auto all = word_corrupt(line, 1.0, 3, atlas);
  const auto w0 = textnorm::words(line.text.text()), w1 = textnorm::words(all.text.text());
  ASSERT_EQ(w1.size(), 2u);
  EXPECT_EQ(metrics::align_words(line.text.text(), all.text.text()).substitutions, 2u);
  const auto cps0 = line.text.codepoints(), cps1 = all.text.codepoints();
  for (std::size_t i = 0; i < cps0.size(); ++i) {
    if (cps0[i] != U' ') EXPECT_NE(cps0[i], cps1[i]);
  }
  EXPECT_EQ(word_corrupt(line, 0.0, 3, atlas).text, line.text);
}

TEST(Corpus, DeterministicPerSeed) {
  const GlyphAtlas atlas = default_atlas();
  EXPECT_EQ(make_corpus(5, 42, atlas), make_corpus(5, 42, atlas));
  EXPECT_NE(make_corpus(5, 42, atlas)[0].text, make_corpus(5, 43, atlas)[0].text);
  // Line i depends only on seed + i.
  EXPECT_EQ(make_corpus(3, 42, atlas)[1], make_corpus(1, 43, atlas)[0]);
}

}  // namespace
}  // namespace ocrwb::synth
