/**********************************************************************
 * File:        reference_engine.hpp
 * Description: Built-in nearest-prototype recognizer over connected
 *              components. Needs non-touching glyphs; it exists so the
 *              pipeline can be evaluated without an external engine.
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
#include <bitset>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocrwb/components.hpp"
#include "ocrwb/imaging.hpp"
#include "ocrwb/synth.hpp"

namespace ocrwb::engines {

inline constexpr int kProtoSide = 16;
using GlyphBits = std::bitset<kProtoSide * kProtoSide>;

struct ReferenceModel {
  std::vector<char32_t> labels;  // sorted
  std::vector<GlyphBits> prototypes;
  double space_gap = 10;  // gaps wider than this (pixels) emit a space
};

/// 1 where a pixel is ink. The image is split at 127 and the minority class
/// is taken as ink, so both dark-on-light and inverted binaries work.
inline Raster ink_mask(const Raster& img) {
  const Raster gray = imaging::to_grayscale(img);
  Raster bright = imaging::threshold(gray, imaging::kDefaultThreshold);
  if (imaging::foreground_ratio(bright) > 0.5) return imaging::invert_binary(bright);
  return bright;
}

/// Scales the ink inside `region` (pixels with `keep(x, y)`) to fit a 16x16
/// grid with its aspect ratio kept and centered. Each cell is sampled at a
/// 4x4 lattice and set when at least half the samples hit ink.
template <typename Keep>
GlyphBits normalize_glyph(const Raster& mask, Rect region, Keep keep) {
  int x0 = region.right(), y0 = region.bottom(), x1 = region.x - 1, y1 = region.y - 1;
  for (int y = region.y; y < region.bottom(); ++y) {
    for (int x = region.x; x < region.right(); ++x) {
      if (mask.at(x, y) && keep(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  GlyphBits bits;
  if (x1 < x0) return bits;
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  const int side = std::max(w, h);
  const int ow = std::max(1, (w * kProtoSide + side / 2) / side);
  const int oh = std::max(1, (h * kProtoSide + side / 2) / side);
  const int ox = (kProtoSide - ow) / 2, oy = (kProtoSide - oh) / 2;
  constexpr int kSub = 4;
  for (int v = 0; v < oh; ++v) {
    for (int u = 0; u < ow; ++u) {
      int hits = 0;
      for (int j = 0; j < kSub; ++j) {
        const int sy = y0 + ((v * kSub + j) * 2 + 1) * h / (2 * oh * kSub);
        for (int i = 0; i < kSub; ++i) {
          const int sx = x0 + ((u * kSub + i) * 2 + 1) * w / (2 * ow * kSub);
          if (mask.at(sx, sy) && keep(sx, sy)) ++hits;
        }
      }
      if (2 * hits >= kSub * kSub) bits.set(static_cast<std::size_t>((oy + v) * kProtoSide + ox + u));
    }
  }
  return bits;
}

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Builds one prototype per glyph class (thresholded mean of its 16x16
/// crops) and a space threshold halfway between the median intra-word and
/// inter-word gaps observed in the training lines.
inline ReferenceModel train_reference(const std::vector<synth::RenderedLine>& samples) {
  if (samples.empty()) throw Error(ErrorCode::NoSamples, "no training lines");
  std::map<char32_t, std::vector<GlyphBits>> crops;
  std::vector<double> intra, inter;
  for (const auto& line : samples) {
    const Raster mask = ink_mask(line.image);
    const std::u32string cps = line.text.codepoints();
    std::size_t box = 0;
    bool space = false;
    for (char32_t c : cps) {
      if (c == U' ') {
        space = true;
        continue;
      }
      if (box >= line.glyph_boxes.size() || line.glyph_boxes[box].codepoint != c) {
        throw Error(ErrorCode::UnlabeledGlyph, "glyph boxes do not match text " + line.text.text());
      }
      const Rect r = line.glyph_boxes[box].rect;
      const GlyphBits bits = normalize_glyph(mask, r, [](int, int) { return true; });
      if (bits.none()) throw Error(ErrorCode::UnlabeledGlyph, "glyph box without ink");
      crops[c].push_back(bits);
      if (box > 0) {
        const Rect prev = line.glyph_boxes[box - 1].rect;
        (space ? inter : intra).push_back(prev.x - r.right());
      }
      ++box;
      space = false;
    }
    if (box != line.glyph_boxes.size()) {
      throw Error(ErrorCode::UnlabeledGlyph, "extra glyph boxes for " + line.text.text());
    }
  }

  ReferenceModel model;
  for (const auto& [label, list] : crops) {
    GlyphBits proto;
    for (std::size_t cell = 0; cell < proto.size(); ++cell) {
      std::size_t on = 0;
      for (const auto& b : list) on += b[cell];
      if (2 * on >= list.size()) proto.set(cell);
    }
    model.labels.push_back(label);
    model.prototypes.push_back(proto);
  }
  if (!intra.empty() && !inter.empty()) {
    model.space_gap = 0.5 * (detail::median(intra) + detail::median(inter));
  } else if (!intra.empty()) {
    model.space_gap = 2.0 * detail::median(intra) + 1.0;  // no word breaks seen
  } else if (!inter.empty()) {
    model.space_gap = 0.5 * detail::median(inter);
  }
  return model;
}

/// Trains on one clean rendering of every atlas glyph, in words of three,
/// so the space threshold sees both gap kinds.
inline ReferenceModel train_from_atlas(const synth::GlyphAtlas& atlas) {
  std::vector<synth::RenderedLine> lines;
  const auto cps = atlas.codepoints();
  std::u32string text;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (i && i % 3 == 0) text.push_back(U' ');
    text.push_back(cps[i]);
  }
  lines.push_back(synth::render_line(textnorm::normalize_text(utf8::encode(text)), atlas));
  return train_reference(lines);
}

struct RecognizedGlyph {
  char32_t codepoint = 0;
  double confidence = 0;  // 1 - hamming / 256
  Rect rect;
};

struct Recognition {
  std::string text;
  std::vector<RecognizedGlyph> glyphs;  // emission order
};

/// Components are emitted right-to-left and each takes the label of the
/// nearest prototype by Hamming distance (ties go to the smaller codepoint).
inline Recognition recognize_reference(const ReferenceModel& model, const Raster& line) {
  if (model.prototypes.empty()) throw Error(ErrorCode::InvalidArgument, "empty reference model");
  const Raster mask = ink_mask(line);
  const Labelling lab = label_components(mask);
  if (lab.components.empty()) throw Error(ErrorCode::EmptyLine, "no ink components");

  std::vector<Component> order = lab.components;
  std::sort(order.begin(), order.end(), [](const Component& a, const Component& b) {
    if (a.bbox.right() != b.bbox.right()) return a.bbox.right() > b.bbox.right();
    if (a.bbox.x != b.bbox.x) return a.bbox.x > b.bbox.x;
    return a.bbox.y < b.bbox.y;
  });

  Recognition rec;
  std::u32string text;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Component& comp = order[i];
    const GlyphBits bits = normalize_glyph(
        mask, comp.bbox, [&](int x, int y) { return lab.at(x, y) == comp.label; });
    std::size_t best = 0, best_d = bits.size() + 1;
    for (std::size_t p = 0; p < model.prototypes.size(); ++p) {
      const std::size_t d = (bits ^ model.prototypes[p]).count();
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    if (i > 0) {
      const int gap = order[i - 1].bbox.x - comp.bbox.right();
      if (gap > model.space_gap) text.push_back(U' ');
    }
    text.push_back(model.labels[best]);
    rec.glyphs.push_back({model.labels[best],
                          1.0 - static_cast<double>(best_d) / static_cast<double>(bits.size()),
                          comp.bbox});
  }
  rec.text = textnorm::canonicalize(utf8::encode(text));
  return rec;
}

inline nlohmann::json to_json(const ReferenceModel& m) {
  nlohmann::json protos = nlohmann::json::array();
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    protos.push_back({{"label", utf8::encode(std::u32string(1, m.labels[i]))},
                      {"bits", m.prototypes[i].to_string()}});
  }
  return {{"side", kProtoSide}, {"space_gap", m.space_gap}, {"prototypes", std::move(protos)}};
}

inline ReferenceModel model_from_json(const nlohmann::json& j) {
  if (j.at("side").get<int>() != kProtoSide) {
    throw Error(ErrorCode::InvalidArgument, "prototype side mismatch");
  }
  ReferenceModel m;
  m.space_gap = j.at("space_gap").get<double>();
  for (const auto& p : j.at("prototypes")) {
    const std::u32string label = utf8::decode(p.at("label").get<std::string>());
    if (label.size() != 1) throw Error(ErrorCode::InvalidArgument, "prototype label must be one codepoint");
    m.labels.push_back(label[0]);
    m.prototypes.emplace_back(p.at("bits").get<std::string>());
  }
  return m;
}

}  // namespace ocrwb::engines
