/**********************************************************************
 * File:        synth.hpp
 * Description: Deterministic synthetic line images with known glyph
 *              geometry, plus seeded degradation.
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

#include <bit>
#include <map>
#include <string>
#include <vector>

#include "ocrwb/imaging.hpp"
#include "ocrwb/rng.hpp"
#include "ocrwb/textnorm.hpp"

namespace ocrwb::synth {

/// The 22 base letters of the Syriac alphabet.
inline const std::u32string& syriac_letters() {
  static const std::u32string letters = {0x0710, 0x0712, 0x0713, 0x0715, 0x0717, 0x0718,
                                         0x0719, 0x071A, 0x071B, 0x071D, 0x071F, 0x0720,
                                         0x0721, 0x0722, 0x0723, 0x0725, 0x0726, 0x0728,
                                         0x0729, 0x072A, 0x072B, 0x072C};
  return letters;
}

/// Codepoint -> binary bitmap (1 = ink) plus spacing rules.
struct GlyphAtlas {
  std::map<char32_t, Raster> glyphs;
  int inter_glyph_gap = 4;
  int inter_word_gap = 16;
  int baseline_height = 32;

  bool contains(char32_t c) const { return glyphs.count(c) != 0; }

  std::vector<char32_t> codepoints() const {
    std::vector<char32_t> out;
    for (const auto& [cp, _] : glyphs) out.push_back(cp);
    return out;
  }

  void validate() const {
    if (inter_word_gap <= inter_glyph_gap) {
      throw Error(ErrorCode::InvalidArgument, "inter-word gap must exceed inter-glyph gap");
    }
    for (const auto& [cp, bmp] : glyphs) {
      auto px = bmp.pixels();
      if (std::none_of(px.begin(), px.end(), [](std::uint8_t v) { return v != 0; })) {
        throw Error(ErrorCode::InvalidArgument, "empty glyph bitmap " + utf8::codepoint_label(cp));
      }
    }
  }
};

namespace detail {

/// Box-drawn glyph: a fixed top bar and right bar plus up to five optional
/// strokes selected by `code` (left bar, middle vertical, two inner
/// horizontals, bottom bar). Every stroke touches a fixed bar, so each glyph
/// is one connected component spanning its whole cell.
inline Raster box_glyph(unsigned code, int w = 24, int h = 32, int stroke = 4) {
  Raster g(w, h, 1, 0);
  fill_rect(g, {0, 0, w, stroke}, 1);
  fill_rect(g, {w - stroke, 0, stroke, h}, 1);
  if (code & 1u) fill_rect(g, {0, 0, stroke, h}, 1);
  if (code & 2u) fill_rect(g, {(w - stroke) / 2 - 2, 0, stroke, h}, 1);
  if (code & 4u) fill_rect(g, {0, h * 9 / 32, w, stroke}, 1);
  if (code & 8u) fill_rect(g, {0, h * 18 / 32, w, stroke}, 1);
  if (code & 16u) fill_rect(g, {0, h - stroke, w, stroke}, 1);
  return g;
}

}  // namespace detail

/// 24x32 box glyphs for the 22 Syriac letters; 4 px glyph gap, 16 px word gap.
inline GlyphAtlas default_atlas() {
  std::vector<unsigned> codes;
  for (int weight : {2, 3, 1, 4}) {
    for (unsigned c = 0; c < 32; ++c) {
      if (std::popcount(c) == weight) codes.push_back(c);
    }
  }
  GlyphAtlas atlas;
  const auto& letters = syriac_letters();
  for (std::size_t i = 0; i < letters.size(); ++i) {
    atlas.glyphs.emplace(letters[i], detail::box_glyph(codes[i]));
  }
  return atlas;
}

struct GlyphBox {
  char32_t codepoint = 0;
  Rect rect;
  bool operator==(const GlyphBox&) const = default;
};

struct RenderedLine {
  Raster image;  // 1 channel, ink 0 on paper 255
  textnorm::GroundTruth text;
  std::vector<GlyphBox> glyph_boxes;  // emission (logical) order
  bool operator==(const RenderedLine&) const = default;
};

struct RenderOptions {
  int margin = 16;
  int height = 110;  // canvas height; grows if the atlas needs more
};

/// Lays glyphs out right-to-left from the right margin, bottoms on a shared
/// baseline. Spaces replace the glyph gap with the word gap.
inline RenderedLine render_line(const textnorm::GroundTruth& text, const GlyphAtlas& atlas,
                                const RenderOptions& opt = {}) {
  const std::u32string cps = text.codepoints();
  int content = 0;
  bool first = true, space = false;
  for (char32_t c : cps) {
    if (c == U' ') {
      space = true;
      continue;
    }
    auto it = atlas.glyphs.find(c);
    if (it == atlas.glyphs.end()) throw Error(ErrorCode::MissingGlyph, utf8::codepoint_label(c));
    if (!first) content += space ? atlas.inter_word_gap : atlas.inter_glyph_gap;
    content += it->second.width();
    first = false;
    space = false;
  }
  const int width = content + 2 * opt.margin;
  const int height = std::max(opt.height, atlas.baseline_height + 2 * opt.margin);
  const int top = (height - atlas.baseline_height) / 2;

  RenderedLine line{Raster(width, height, 1, 255), text, {}};
  int cursor = width - opt.margin;
  first = true;
  space = false;
  for (char32_t c : cps) {
    if (c == U' ') {
      space = true;
      continue;
    }
    const Raster& g = atlas.glyphs.at(c);
    if (!first) cursor -= space ? atlas.inter_word_gap : atlas.inter_glyph_gap;
    const Rect box{cursor - g.width(), top + atlas.baseline_height - g.height(), g.width(),
                   g.height()};
    for (int y = 0; y < g.height(); ++y) {
      for (int x = 0; x < g.width(); ++x) {
        if (g.at(x, y)) line.image.at(box.x + x, box.y + y) = 0;
      }
    }
    line.glyph_boxes.push_back({c, box});
    cursor = box.x;
    first = false;
    space = false;
  }
  return line;
}

struct NoiseParams {
  double salt_pepper = 0;  // per-pixel flip probability
  int blur_k = 1;
  double char_corrupt = 0;  // per-codepoint substitution probability
  std::uint64_t seed = 0;
};

namespace detail {

inline char32_t substitute(char32_t original, const std::vector<char32_t>& pool, SplitMix64& rng) {
  std::vector<char32_t> others;
  for (char32_t c : pool) {
    if (c != original) others.push_back(c);
  }
  if (others.empty()) return original;
  return others[static_cast<std::size_t>(rng.below(others.size()))];
}

inline textnorm::GroundTruth must_normalize(const std::u32string& cps) {
  return textnorm::normalize_text(utf8::encode(cps));
}

}  // namespace detail

/// Applies, in order: codepoint substitution (re-rendering the line),
/// salt-and-pepper flips, then box blur. Deterministic for a given seed.
inline RenderedLine degrade(const RenderedLine& line, const NoiseParams& noise,
                            const GlyphAtlas& atlas, const RenderOptions& opt = {}) {
  if (noise.salt_pepper < 0 || noise.salt_pepper > 1 || noise.char_corrupt < 0 ||
      noise.char_corrupt > 1) {
    throw Error(ErrorCode::InvalidArgument, "noise probabilities must lie in [0, 1]");
  }
  SplitMix64 rng(noise.seed);
  RenderedLine out = line;
  if (noise.char_corrupt > 0) {
    const auto pool = atlas.codepoints();
    std::u32string cps = line.text.codepoints();
    for (char32_t& c : cps) {
      if (rng.bernoulli(noise.char_corrupt)) c = detail::substitute(c, pool, rng);
    }
    out = render_line(detail::must_normalize(cps), atlas, opt);
  }
  if (noise.salt_pepper > 0) {
    for (auto& v : out.image.pixels()) {
      if (rng.bernoulli(noise.salt_pepper)) v = static_cast<std::uint8_t>(255 - v);
    }
  }
  if (noise.blur_k > 1) out.image = imaging::box_blur(out.image, noise.blur_k);
  return out;
}

/// Word-level variant: each word is replaced, with probability q, by
/// substituting every one of its codepoints.
inline RenderedLine word_corrupt(const RenderedLine& line, double q, std::uint64_t seed,
                                 const GlyphAtlas& atlas, const RenderOptions& opt = {}) {
  SplitMix64 rng(seed);
  const auto pool = atlas.codepoints();
  std::u32string cps = line.text.codepoints();
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t j = i;
    while (j < cps.size() && cps[j] != U' ') ++j;
    if (j > i && rng.bernoulli(q)) {
      for (std::size_t k = i; k < j; ++k) cps[k] = detail::substitute(cps[k], pool, rng);
    }
    i = j + 1;
  }
  return render_line(detail::must_normalize(cps), atlas, opt);
}

struct TextShape {
  int min_words = 2;
  int max_words = 5;
  int min_letters = 2;
  int max_letters = 6;
};

/// Random words over the atlas codepoints.
inline textnorm::GroundTruth random_text(SplitMix64& rng, const GlyphAtlas& atlas,
                                         const TextShape& shape = {}) {
  const auto pool = atlas.codepoints();
  auto between = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  };
  std::u32string text;
  const int nwords = between(shape.min_words, shape.max_words);
  for (int w = 0; w < nwords; ++w) {
    if (w) text.push_back(U' ');
    const int nletters = between(shape.min_letters, shape.max_letters);
    for (int l = 0; l < nletters; ++l) text.push_back(pool[rng.below(pool.size())]);
  }
  return detail::must_normalize(text);
}

/// `count` clean lines; line i draws its text from seed + i.
inline std::vector<RenderedLine> make_corpus(std::size_t count, std::uint64_t seed,
                                             const GlyphAtlas& atlas, const TextShape& shape = {},
                                             const RenderOptions& opt = {}) {
  std::vector<RenderedLine> lines;
  lines.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SplitMix64 rng(seed + i);
    lines.push_back(render_line(random_text(rng, atlas, shape), atlas, opt));
  }
  return lines;
}

}  // namespace ocrwb::synth
