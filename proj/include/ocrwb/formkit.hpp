/**********************************************************************
 * File:        formkit.hpp
 * Description: Data-collection form pages: layout and rendering with
 *              corner fiducials, fiducial-based scan registration and
 *              per-slot crop extraction.
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

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocrwb/components.hpp"
#include "ocrwb/imaging.hpp"
#include "ocrwb/synth.hpp"

namespace ocrwb::formkit {

inline constexpr double kMmPerInch = 25.4;

struct PointMm {
  double x = 0;
  double y = 0;
  bool operator==(const PointMm&) const = default;
};

/// Handwriting box. The rectangle is the writable interior; the printed
/// border is drawn just outside it.
struct SlotBox {
  int slot_id = 0;
  double x_mm = 0, y_mm = 0, w_mm = 0, h_mm = 0;
  std::string prompt_text;
  bool operator==(const SlotBox&) const = default;
};

struct TemplateDescriptor {
  std::string template_id;
  double page_width_mm = 210;
  double page_height_mm = 297;
  double fiducial_mm = 5;
  std::array<PointMm, 4> fiducials{};  // centers: top-left, top-right, bottom-left, bottom-right
  std::vector<SlotBox> slots;          // top-to-bottom

  bool operator==(const TemplateDescriptor&) const = default;

  void validate() const {
    std::vector<int> ids;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& s = slots[i];
      if (s.w_mm <= 0 || s.h_mm <= 0) throw Error(ErrorCode::InvalidArgument, "slot with empty size");
      if (s.x_mm < 0 || s.y_mm < 0 || s.x_mm + s.w_mm > page_width_mm ||
          s.y_mm + s.h_mm > page_height_mm) {
        throw Error(ErrorCode::InvalidArgument, "slot outside page: " + std::to_string(s.slot_id));
      }
      for (std::size_t j = 0; j < i; ++j) {
        const auto& o = slots[j];
        if (s.slot_id == o.slot_id) throw Error(ErrorCode::InvalidArgument, "duplicate slot id");
        const bool overlap = s.x_mm < o.x_mm + o.w_mm && o.x_mm < s.x_mm + s.w_mm &&
                             s.y_mm < o.y_mm + o.h_mm && o.y_mm < s.y_mm + s.h_mm;
        if (overlap) throw Error(ErrorCode::InvalidArgument, "overlapping slots");
        if (s.y_mm < o.y_mm) throw Error(ErrorCode::InvalidArgument, "slots not in reading order");
      }
    }
    for (int c = 0; c < 4; ++c) {
      const bool right = c % 2 == 1, bottom = c >= 2;
      const auto& f = fiducials[c];
      if ((f.x > page_width_mm / 2) != right || (f.y > page_height_mm / 2) != bottom) {
        throw Error(ErrorCode::InvalidArgument, "fiducial " + std::to_string(c) + " not in its corner");
      }
    }
  }
};

inline nlohmann::json to_json(const TemplateDescriptor& t) {
  nlohmann::json fid = nlohmann::json::array();
  for (const auto& f : t.fiducials) fid.push_back({{"x", f.x}, {"y", f.y}});
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& s : t.slots) {
    slots.push_back({{"slot_id", s.slot_id}, {"x", s.x_mm}, {"y", s.y_mm}, {"w", s.w_mm},
                     {"h", s.h_mm}, {"prompt", s.prompt_text}});
  }
  return {{"template_id", t.template_id},
          {"page_mm", {t.page_width_mm, t.page_height_mm}},
          {"fiducial_mm", t.fiducial_mm},
          {"fiducials", std::move(fid)},
          {"slots", std::move(slots)}};
}

inline TemplateDescriptor template_from_json(const nlohmann::json& j) {
  TemplateDescriptor t;
  t.template_id = j.at("template_id").get<std::string>();
  t.page_width_mm = j.at("page_mm").at(0).get<double>();
  t.page_height_mm = j.at("page_mm").at(1).get<double>();
  t.fiducial_mm = j.value("fiducial_mm", 5.0);
  const auto& fid = j.at("fiducials");
  if (fid.size() != 4) throw Error(ErrorCode::InvalidArgument, "template needs exactly 4 fiducials");
  for (int i = 0; i < 4; ++i) t.fiducials[i] = {fid[i].at("x").get<double>(), fid[i].at("y").get<double>()};
  for (const auto& s : j.at("slots")) {
    t.slots.push_back({s.at("slot_id").get<int>(), s.at("x").get<double>(), s.at("y").get<double>(),
                       s.at("w").get<double>(), s.at("h").get<double>(),
                       s.at("prompt").get<std::string>()});
  }
  t.validate();
  return t;
}

/// A4 portrait with 20 rows: a printed prompt, then the box to write in.
struct LayoutParams {
  std::string template_id = "form";
  double page_width_mm = 210;
  double page_height_mm = 297;
  int capacity = 20;
  double top_mm = 20, bottom_mm = 20;
  double left_mm = 20, right_mm = 20;
  double fiducial_mm = 5;
  double fiducial_inset_mm = 8;  // page edge to fiducial edge
  double prompt_height_mm = 3.5;
  double prompt_gap_mm = 0.9;   // prompt baseline to box border
  double row_gap_mm = 0.8;      // box bottom to next prompt
  double border_mm = 0.35;
  int dpi = 300;
};

/// Builds the descriptor only: one slot per sentence, in order.
inline TemplateDescriptor layout_template(const std::vector<std::string>& sentences,
                                          const LayoutParams& p = {}) {
  if (sentences.empty()) throw Error(ErrorCode::EmptyInput, "no sentences");
  if (static_cast<int>(sentences.size()) > p.capacity) {
    throw Error(ErrorCode::CapacityExceeded, std::to_string(sentences.size()) + " sentences, capacity " +
                                                 std::to_string(p.capacity));
  }
  TemplateDescriptor t;
  t.template_id = p.template_id;
  t.page_width_mm = p.page_width_mm;
  t.page_height_mm = p.page_height_mm;
  t.fiducial_mm = p.fiducial_mm;
  const double c = p.fiducial_inset_mm + p.fiducial_mm / 2;
  t.fiducials = {PointMm{c, c}, PointMm{p.page_width_mm - c, c}, PointMm{c, p.page_height_mm - c},
                 PointMm{p.page_width_mm - c, p.page_height_mm - c}};
  const double pitch = (p.page_height_mm - p.top_mm - p.bottom_mm) / p.capacity;
  const double box_h = pitch - p.prompt_height_mm - p.prompt_gap_mm - p.row_gap_mm;
  if (box_h <= 0) throw Error(ErrorCode::InvalidArgument, "rows too tight for the prompt height");
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const double row = p.top_mm + static_cast<double>(i) * pitch;
    t.slots.push_back({static_cast<int>(i) + 1, p.left_mm, row + p.prompt_height_mm + p.prompt_gap_mm,
                       p.page_width_mm - p.left_mm - p.right_mm, box_h, sentences[i]});
  }
  t.validate();
  return t;
}

inline double px_per_mm(int dpi) { return dpi / kMmPerInch; }

inline Rect mm_rect_to_px(double x, double y, double w, double h, double s) {
  const int x0 = static_cast<int>(std::lround(x * s)), y0 = static_cast<int>(std::lround(y * s));
  const int x1 = static_cast<int>(std::lround((x + w) * s)), y1 = static_cast<int>(std::lround((y + h) * s));
  return Rect{x0, y0, std::max(1, x1 - x0), std::max(1, y1 - y0)};
}

namespace detail {

/// Hollow square drawn for codepoints the atlas lacks.
inline Raster tofu_glyph(int w = 24, int h = 32, int stroke = 3) {
  Raster g(w, h, 1, 0);
  fill_rect(g, {0, 0, w, stroke}, 1);
  fill_rect(g, {0, h - stroke, w, stroke}, 1);
  fill_rect(g, {0, 0, stroke, h}, 1);
  fill_rect(g, {w - stroke, 0, stroke, h}, 1);
  return g;
}

}  // namespace detail

/// Draws `text` into `page`, right-aligned against `right`, scaled to fit
/// inside a `box_w` x `box_h` pixel area whose top is `top`.
inline void draw_text(Raster& page, std::string_view text, int right, int top, int box_w, int box_h,
                      const synth::GlyphAtlas& atlas) {
  std::string normalized = textnorm::canonicalize(text);
  if (normalized.empty()) return;
  synth::GlyphAtlas local = atlas;
  for (char32_t c : utf8::decode(normalized)) {
    if (c != U' ' && !local.contains(c)) local.glyphs.emplace(c, detail::tofu_glyph());
  }
  const synth::RenderedLine line = synth::render_line(textnorm::normalize_text(normalized), local,
                                                      synth::RenderOptions{0, atlas.baseline_height});
  const double scale = std::min(static_cast<double>(box_h) / line.image.height(),
                                static_cast<double>(box_w) / line.image.width());
  const int w = std::max(1, static_cast<int>(line.image.width() * scale));
  const int h = std::max(1, static_cast<int>(line.image.height() * scale));
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(line.image.height() - 1, static_cast<int>((y + 0.5) / scale));
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(line.image.width() - 1, static_cast<int>((x + 0.5) / scale));
      const int px = right - w + x, py = top + y;
      if (page.contains(px, py) && line.image.at(sx, sy) < 128) page.at(px, py) = 0;
    }
  }
}

struct RenderedTemplate {
  Raster page;
  TemplateDescriptor descriptor;
};

/// Lays out and rasterizes a printable form page (1-channel, white paper).
inline RenderedTemplate render_template(const std::vector<std::string>& sentences,
                                        const LayoutParams& p = {},
                                        const synth::GlyphAtlas& atlas = synth::default_atlas()) {
  TemplateDescriptor t = layout_template(sentences, p);
  const double s = px_per_mm(p.dpi);
  Raster page(static_cast<int>(std::lround(p.page_width_mm * s)),
              static_cast<int>(std::lround(p.page_height_mm * s)), 1, 255);
  for (const auto& f : t.fiducials) {
    fill_rect(page, mm_rect_to_px(f.x - t.fiducial_mm / 2, f.y - t.fiducial_mm / 2, t.fiducial_mm,
                                  t.fiducial_mm, s), 0);
  }
  const double b = p.border_mm;
  for (const auto& slot : t.slots) {
    const double x = slot.x_mm, y = slot.y_mm, w = slot.w_mm, h = slot.h_mm;
    fill_rect(page, mm_rect_to_px(x - b, y - b, w + 2 * b, b, s), 0);
    fill_rect(page, mm_rect_to_px(x - b, y + h, w + 2 * b, b, s), 0);
    fill_rect(page, mm_rect_to_px(x - b, y - b, b, h + 2 * b, s), 0);
    fill_rect(page, mm_rect_to_px(x + w, y - b, b, h + 2 * b, s), 0);
    const Rect prompt = mm_rect_to_px(x, y - p.prompt_gap_mm - p.prompt_height_mm, w,
                                      p.prompt_height_mm, s);
    draw_text(page, slot.prompt_text, prompt.right(), prompt.y, prompt.w, prompt.h, atlas);
  }
  return {std::move(page), std::move(t)};
}

/// Affine map from template millimeters to scan pixels.
struct ScanRegistration {
  double dpi = 0;
  imaging::Affine affine;
  double residual_px = 0;
  int fiducials_found = 0;
};

/// Pure scale at a known resolution, for scans without usable fiducials.
inline ScanRegistration registration_from_dpi(double dpi) {
  if (dpi <= 0) throw Error(ErrorCode::InvalidArgument, "dpi must be positive");
  return {dpi, imaging::Affine::scale(dpi / kMmPerInch), 0.0, 0};
}

struct RegisterOptions {
  int threshold = imaging::kDefaultThreshold;
  double max_residual_px = 5;
  double min_fill = 0.85;    // filled squares only
  double max_aspect = 1.5;
  std::size_t min_area = 64;
};

/// Least-squares affine from point pairs (>= 3, not collinear).
inline imaging::Affine fit_affine(const std::vector<PointMm>& from, const std::vector<PointMm>& to) {
  // Normal equations M p = v for each output coordinate, M = sum [x y 1]^T [x y 1].
  double m[3][3] = {};
  double vx[3] = {}, vy[3] = {};
  for (std::size_t i = 0; i < from.size(); ++i) {
    const double r[3] = {from[i].x, from[i].y, 1.0};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) m[a][b] += r[a] * r[b];
      vx[a] += r[a] * to[i].x;
      vy[a] += r[a] * to[i].y;
    }
  }
  auto det3 = [](const double q[3][3]) {
    return q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1]) -
           q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0]) +
           q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
  };
  const double d = det3(m);
  if (std::abs(d) < 1e-9) throw Error(ErrorCode::PoorFit, "fiducials are collinear");
  auto solve = [&](const double v[3], double out[3]) {
    for (int col = 0; col < 3; ++col) {
      double q[3][3];
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) q[a][b] = b == col ? v[a] : m[a][b];
      }
      out[col] = det3(q) / d;
    }
  };
  double px[3], py[3];
  solve(vx, px);
  solve(vy, py);
  return imaging::Affine{px[0], px[1], px[2], py[0], py[1], py[2]};
}

/// Finds the four corner squares (largest filled, roughly square dark
/// component in each page quadrant) and fits the mm -> pixel affine.
inline ScanRegistration register_scan(const Raster& scan, const TemplateDescriptor& tpl,
                                      const RegisterOptions& opt = {}) {
  const Raster dark = imaging::invert_binary(imaging::threshold(imaging::to_grayscale(scan), opt.threshold));
  const Labelling lab = label_components(dark);
  std::array<const Component*, 4> best{};
  for (const auto& c : lab.components) {
    if (c.area < opt.min_area || c.fill_ratio() < opt.min_fill) continue;
    const double aspect = static_cast<double>(std::max(c.bbox.w, c.bbox.h)) / std::min(c.bbox.w, c.bbox.h);
    if (aspect > opt.max_aspect) continue;
    const int q = (c.cx > scan.width() / 2.0 ? 1 : 0) + (c.cy > scan.height() / 2.0 ? 2 : 0);
    if (!best[q] || c.area > best[q]->area) best[q] = &c;
  }
  std::vector<PointMm> from, to;
  for (int q = 0; q < 4; ++q) {
    if (!best[q]) continue;
    from.push_back(tpl.fiducials[q]);
    to.push_back({best[q]->cx, best[q]->cy});
  }
  if (from.size() < 3) {
    throw Error(ErrorCode::FiducialsNotFound, std::to_string(from.size()) + " of 4 fiducials detected");
  }
  ScanRegistration reg;
  reg.affine = fit_affine(from, to);
  reg.fiducials_found = static_cast<int>(from.size());
  double err = 0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    double x, y;
    reg.affine.apply(from[i].x, from[i].y, x, y);
    err += std::hypot(x - to[i].x, y - to[i].y);
  }
  reg.residual_px = err / static_cast<double>(from.size());
  reg.dpi = kMmPerInch * std::sqrt(std::abs(reg.affine.det()));
  if (std::abs(reg.affine.det()) < 1e-9) throw Error(ErrorCode::PoorFit, "degenerate affine");
  if (reg.residual_px > opt.max_residual_px) {
    throw Error(ErrorCode::PoorFit, "mean fiducial residual " + std::to_string(reg.residual_px) + " px");
  }
  return reg;
}

struct SlotCrop {
  int slot_id = 0;
  Rect bounds;         // axis-aligned scan-pixel box of the mapped interior
  Raster image;        // interior resampled upright
  double ink_ratio = 0;
  bool empty = false;  // ink ratio below 0.1%
};

struct ExtractOptions {
  double inset_fraction = 0.02;
  double empty_ink_ratio = 0.001;
};

/// The slot interior (inset on every side) mapped through the registration.
inline Rect mapped_bounds(const SlotBox& s, const imaging::Affine& a, double inset_fraction) {
  const double ix = s.w_mm * inset_fraction, iy = s.h_mm * inset_fraction;
  const double xs[2] = {s.x_mm + ix, s.x_mm + s.w_mm - ix};
  const double ys[2] = {s.y_mm + iy, s.y_mm + s.h_mm - iy};
  double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
  for (double x : xs) {
    for (double y : ys) {
      double px, py;
      a.apply(x, y, px, py);
      x0 = std::min(x0, px);
      y0 = std::min(y0, py);
      x1 = std::max(x1, px);
      y1 = std::max(y1, py);
    }
  }
  const int rx = static_cast<int>(std::lround(x0)), ry = static_cast<int>(std::lround(y0));
  return Rect{rx, ry, static_cast<int>(std::lround(x1)) - rx, static_cast<int>(std::lround(y1)) - ry};
}

/// One crop per slot in slot order, or an error; never a partial list.
inline std::vector<SlotCrop> extract_boxes(const Raster& scan, const TemplateDescriptor& tpl,
                                           const ScanRegistration& reg, const ExtractOptions& opt = {}) {
  if (std::abs(reg.affine.det()) < 1e-9) throw Error(ErrorCode::InvalidArgument, "singular registration");
  const auto& a = reg.affine;
  const double sx = std::hypot(a.a, a.d), sy = std::hypot(a.b, a.e);
  std::vector<SlotCrop> out;
  for (const auto& slot : tpl.slots) {
    SlotCrop crop;
    crop.slot_id = slot.slot_id;
    crop.bounds = mapped_bounds(slot, a, opt.inset_fraction);
    if (crop.bounds.x < 0 || crop.bounds.y < 0 || crop.bounds.right() > scan.width() ||
        crop.bounds.bottom() > scan.height() || crop.bounds.empty()) {
      throw Error(ErrorCode::SlotOutOfBounds, "slot " + std::to_string(slot.slot_id));
    }
    const double x0 = slot.x_mm + slot.w_mm * opt.inset_fraction;
    const double y0 = slot.y_mm + slot.h_mm * opt.inset_fraction;
    const double iw = slot.w_mm * (1 - 2 * opt.inset_fraction);
    const double ih = slot.h_mm * (1 - 2 * opt.inset_fraction);
    const int ow = std::max(1, static_cast<int>(std::lround(iw * sx)));
    const int oh = std::max(1, static_cast<int>(std::lround(ih * sy)));
    crop.image = Raster(ow, oh, scan.channels(), 255);
    for (int v = 0; v < oh; ++v) {
      for (int u = 0; u < ow; ++u) {
        double px, py;
        a.apply(x0 + (u + 0.5) * iw / ow, y0 + (v + 0.5) * ih / oh, px, py);
        const int ix = static_cast<int>(std::floor(px)), iy = static_cast<int>(std::floor(py));
        if (!scan.contains(ix, iy)) continue;
        for (int c = 0; c < scan.channels(); ++c) crop.image.at(u, v, c) = scan.at(ix, iy, c);
      }
    }
    crop.ink_ratio = imaging::ink_ratio(crop.image);
    crop.empty = crop.ink_ratio < opt.empty_ink_ratio;
    out.push_back(std::move(crop));
  }
  return out;
}

}  // namespace ocrwb::formkit
