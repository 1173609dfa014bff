/**********************************************************************
 * File:        imaging.hpp
 * Description: Grayscale conversion, box-filter blur, global thresholding
 *              and fixed-geometry line normalization.
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
#include <cmath>
#include <cstdint>
#include <vector>

#include "ocrwb/raster.hpp"

namespace ocrwb::imaging {

inline constexpr int kDefaultBlurK = 4;
inline constexpr int kDefaultThreshold = 127;

enum class HAlign { Right, Left, Center };

/// Target geometry of a dataset line image.
struct LineGeometry {
  int target_width = 1200;
  int target_height = 110;
  std::uint8_t background = 255;
  HAlign alignment = HAlign::Right;
};

/// BT.601 luma, rounded half up. 1-channel input is returned unchanged.
inline Raster to_grayscale(const Raster& img) {
  if (img.channels() == 1) return img;
  Raster out(img.width(), img.height(), 1);
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double luma = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::floor(luma + 0.5), 0.0, 255.0));
  }
  return out;
}

/// Normalized k x k box filter. The window of output (x, y) spans columns
/// [x - k/2, x - k/2 + k - 1] (integer division, so even kernels reach one
/// further left/up than right/down) and the same for rows. Out-of-image
/// samples replicate the nearest edge pixel. The window mean is rounded half up.
inline Raster box_blur(const Raster& img, int k) {
  if (k <= 0) throw Error(ErrorCode::InvalidArgument, "box_blur kernel size must be >= 1");
  if (img.channels() != 1) throw Error(ErrorCode::InvalidArgument, "box_blur expects 1 channel");
  if (k == 1) return img;

  const int w = img.width(), h = img.height();
  const int lead = k / 2;
  auto clamp_x = [w](int x) { return std::clamp(x, 0, w - 1); };
  auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };

  // Horizontal pass: running window sums per row.
  std::vector<std::uint32_t> horiz(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    auto row = img.row(y);
    std::uint32_t sum = 0;
    for (int i = 0; i < k; ++i) sum += row[clamp_x(i - lead)];
    for (int x = 0; x < w; ++x) {
      horiz[static_cast<std::size_t>(y) * w + x] = sum;
      sum += row[clamp_x(x + 1 - lead + k - 1)];
      sum -= row[clamp_x(x - lead)];
    }
  }

  // Vertical pass over the horizontal sums.
  const std::uint32_t area = static_cast<std::uint32_t>(k) * k;
  Raster out(w, h, 1);
  std::vector<std::uint32_t> col_sum(w, 0);
  for (int i = 0; i < k; ++i) {
    const int yy = clamp_y(i - lead);
    for (int x = 0; x < w; ++x) col_sum[x] += horiz[static_cast<std::size_t>(yy) * w + x];
  }
  for (int y = 0; y < h; ++y) {
    auto dst = out.row(y);
    const int enter = clamp_y(y + 1 - lead + k - 1);
    const int leave = clamp_y(y - lead);
    for (int x = 0; x < w; ++x) {
      dst[x] = static_cast<std::uint8_t>((col_sum[x] + area / 2) / area);
      col_sum[x] += horiz[static_cast<std::size_t>(enter) * w + x];
      col_sum[x] -= horiz[static_cast<std::size_t>(leave) * w + x];
    }
  }
  return out;
}

/// Global threshold: 1 where f(x,y) > T, 0 where f(x,y) <= T.
/// The result holds logical values {0, 1}; see expand_binary for storage.
inline Raster threshold(const Raster& img, int t) {
  if (img.channels() != 1) throw Error(ErrorCode::InvalidArgument, "threshold expects 1 channel");
  if (t < 0 || t > 255) throw Error(ErrorCode::InvalidArgument, "threshold must be in [0, 255]");
  Raster out(img.width(), img.height(), 1);
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > t ? 1 : 0;
  return out;
}

/// Swaps the logical classes of a {0, 1} image.
inline Raster invert_binary(const Raster& binary) {
  Raster out = binary;
  for (auto& v : out.pixels()) v = v ? 0 : 1;
  return out;
}

/// Maps logical {0, 1} to stored {0, 255}.
inline Raster expand_binary(const Raster& binary) {
  Raster out = binary;
  for (auto& v : out.pixels()) v = v ? 255 : 0;
  return out;
}

/// Fraction of pixels whose logical value is nonzero.
inline double foreground_ratio(const Raster& binary) {
  auto px = binary.pixels();
  const auto on = std::count_if(px.begin(), px.end(), [](std::uint8_t v) { return v != 0; });
  return static_cast<double>(on) / static_cast<double>(px.size());
}

/// Fraction of dark pixels (<= 127) in a grayscale or RGB image.
inline double ink_ratio(const Raster& img) {
  const Raster gray = to_grayscale(img);
  auto px = gray.pixels();
  const auto dark = std::count_if(px.begin(), px.end(), [](std::uint8_t v) { return v <= 127; });
  return static_cast<double>(dark) / static_cast<double>(px.size());
}

/// Where a w x h image lands inside the target line geometry.
struct LinePlacement {
  int scaled_width = 0;
  int scaled_height = 0;
  int offset_x = 0;
  int offset_y = 0;
};

inline LinePlacement line_placement(int w, int h, const LineGeometry& geom) {
  if (geom.target_width < 1 || geom.target_height < 1) {
    throw Error(ErrorCode::InvalidArgument, "line geometry must be positive");
  }
  const long long W = geom.target_width, H = geom.target_height;
  LinePlacement p;
  // Scale s = min(W/w, H/h), evaluated in integers so exact fits stay exact.
  if (W * h <= H * w) {
    p.scaled_width = static_cast<int>(W);
    p.scaled_height = static_cast<int>(std::clamp<long long>((2 * h * W + w) / (2LL * w), 1, H));
  } else {
    p.scaled_height = static_cast<int>(H);
    p.scaled_width = static_cast<int>(std::clamp<long long>((2 * w * H + h) / (2LL * h), 1, W));
  }
  const int pad_x = geom.target_width - p.scaled_width;
  switch (geom.alignment) {
    case HAlign::Right: p.offset_x = pad_x; break;
    case HAlign::Left: p.offset_x = 0; break;
    case HAlign::Center: p.offset_x = pad_x / 2; break;
  }
  p.offset_y = (geom.target_height - p.scaled_height) / 2;  // odd remainder goes to the bottom
  return p;
}

/// Maps a rectangle in source coordinates into the normalized line.
inline Rect map_rect(const Rect& r, int src_w, int src_h, const LinePlacement& p) {
  auto mx = [&](long long x) {
    return static_cast<int>(p.offset_x + (x * p.scaled_width + src_w / 2) / src_w);
  };
  auto my = [&](long long y) {
    return static_cast<int>(p.offset_y + (y * p.scaled_height + src_h / 2) / src_h);
  };
  const int x0 = mx(r.x), y0 = my(r.y);
  return Rect{x0, y0, std::max(1, mx(r.right()) - x0), std::max(1, my(r.bottom()) - y0)};
}

/// Nearest-neighbor scale into the target box, then pad with the background.
inline Raster normalize_line(const Raster& img, const LineGeometry& geom = {}) {
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "normalize_line on empty image");
  const LinePlacement p = line_placement(img.width(), img.height(), geom);
  Raster out(geom.target_width, geom.target_height, img.channels(), geom.background);
  const long long w = img.width(), h = img.height();
  for (int dy = 0; dy < p.scaled_height; ++dy) {
    const int sy = static_cast<int>(std::min(h - 1, ((2LL * dy + 1) * h) / (2LL * p.scaled_height)));
    for (int dx = 0; dx < p.scaled_width; ++dx) {
      const int sx = static_cast<int>(std::min(w - 1, ((2LL * dx + 1) * w) / (2LL * p.scaled_width)));
      for (int c = 0; c < img.channels(); ++c) {
        out.at(p.offset_x + dx, p.offset_y + dy, c) = img.at(sx, sy, c);
      }
    }
  }
  return out;
}

/// Parameters of the per-image cleanup pipeline.
struct PreprocessParams {
  int blur_k = kDefaultBlurK;
  int threshold = kDefaultThreshold;
  bool invert = false;
  bool normalize = true;
  LineGeometry geometry{};
};

struct PreprocessResult {
  Raster image;  // stored form, values {0, 255}
  bool low_contrast = false;
};

inline constexpr double kLowContrastRatio = 0.001;

/// grayscale -> blur -> threshold -> (invert) -> (normalize). The padding
/// value follows the background class, so it becomes 0 when inverted.
inline PreprocessResult preprocess(const Raster& img, const PreprocessParams& params) {
  Raster binary = threshold(box_blur(to_grayscale(img), params.blur_k), params.threshold);
  const double ratio = foreground_ratio(binary);
  PreprocessResult result;
  result.low_contrast = std::min(ratio, 1.0 - ratio) < kLowContrastRatio;
  if (params.invert) binary = invert_binary(binary);
  result.image = expand_binary(binary);
  if (params.normalize) {
    LineGeometry geom = params.geometry;
    geom.background = params.invert ? 0 : 255;
    result.image = normalize_line(result.image, geom);
  }
  return result;
}

/// Forward affine map: x' = a*x + b*y + c, y' = d*x + e*y + f.
struct Affine {
  double a = 1, b = 0, c = 0;
  double d = 0, e = 1, f = 0;

  double det() const { return a * e - b * d; }

  void apply(double x, double y, double& ox, double& oy) const {
    ox = a * x + b * y + c;
    oy = d * x + e * y + f;
  }

  Affine inverse() const {
    const double dt = det();
    if (std::abs(dt) < 1e-12) throw Error(ErrorCode::InvalidArgument, "affine map is singular");
    Affine inv;
    inv.a = e / dt;
    inv.b = -b / dt;
    inv.d = -d / dt;
    inv.e = a / dt;
    inv.c = -(inv.a * c + inv.b * f);
    inv.f = -(inv.d * c + inv.e * f);
    return inv;
  }

  /// this(other(p))
  Affine compose(const Affine& o) const {
    return Affine{a * o.a + b * o.d, a * o.b + b * o.e, a * o.c + b * o.f + c,
                  d * o.a + e * o.d, d * o.b + e * o.e, d * o.c + e * o.f + f};
  }

  static Affine scale(double s) { return Affine{s, 0, 0, 0, s, 0}; }
  static Affine translation(double dx, double dy) { return Affine{1, 0, dx, 0, 1, dy}; }
  static Affine rotation_about(double degrees, double cx, double cy) {
    const double r = degrees * 3.14159265358979323846 / 180.0;
    const double cs = std::cos(r), sn = std::sin(r);
    return Affine{cs, -sn, cx - cs * cx + sn * cy, sn, cs, cy - sn * cx - cs * cy};
  }
};

/// Resamples `img` through the forward map `fwd` (source -> destination
/// pixel centers) into a width x height canvas, nearest neighbor.
inline Raster warp_affine(const Raster& img, const Affine& fwd, int width, int height,
                          std::uint8_t background = 255) {
  const Affine inv = fwd.inverse();
  Raster out(width, height, img.channels(), background);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sx, sy;
      inv.apply(x + 0.5, y + 0.5, sx, sy);
      const int ix = static_cast<int>(std::floor(sx)), iy = static_cast<int>(std::floor(sy));
      if (!img.contains(ix, iy)) continue;
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(ix, iy, c);
    }
  }
  return out;
}

}  // namespace ocrwb::imaging
