/**********************************************************************
 * File:        raster.hpp
 * Description: 8-bit image container used by every pixel operation.
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
#include <vector>

#include "ocrwb/error.hpp"

namespace ocrwb {

/// Axis-aligned pixel rectangle, [x, x+w) x [y, y+h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }   // exclusive
  int bottom() const { return y + h; }  // exclusive
  bool empty() const { return w <= 0 || h <= 0; }
  bool intersects(const Rect& o) const {
    return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
  }
  bool operator==(const Rect&) const = default;
};

/// Row-major 8-bit raster with 1 or 3 interleaved channels.
class Raster {
 public:
  Raster() = default;

  Raster(int width, int height, int channels = 1, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    check_shape(width, height, channels);
    pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  Raster(int width, int height, int channels, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
    check_shape(width, height, channels);
    if (pixels_.size() != static_cast<std::size_t>(width) * height * channels) {
      throw Error(ErrorCode::InvalidArgument, "pixel buffer length does not match geometry");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return pixels_.empty(); }
  std::size_t size() const { return pixels_.size(); }

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<std::uint8_t> row(int y) {
    return {pixels_.data() + static_cast<std::size_t>(y) * width_ * channels_,
            static_cast<std::size_t>(width_) * channels_};
  }
  std::span<const std::uint8_t> row(int y) const {
    return {pixels_.data() + static_cast<std::size_t>(y) * width_ * channels_,
            static_cast<std::size_t>(width_) * channels_};
  }

  std::span<std::uint8_t> pixels() { return pixels_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool operator==(const Raster&) const = default;

 private:
  static void check_shape(int width, int height, int channels) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::InvalidArgument, "raster dimensions must be >= 1");
    }
    if (channels != 1 && channels != 3) {
      throw Error(ErrorCode::InvalidArgument, "raster channels must be 1 or 3");
    }
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> pixels_;
};

/// Copies the pixels under `r` (clipped to the image) into a new raster.
inline Raster crop(const Raster& img, Rect r) {
  const int x0 = std::max(0, r.x), y0 = std::max(0, r.y);
  const int x1 = std::min(img.width(), r.right()), y1 = std::min(img.height(), r.bottom());
  if (x1 <= x0 || y1 <= y0) {
    throw Error(ErrorCode::InvalidArgument, "crop rectangle lies outside the image");
  }
  Raster out(x1 - x0, y1 - y0, img.channels());
  for (int y = y0; y < y1; ++y) {
    auto src = img.row(y).subspan(static_cast<std::size_t>(x0) * img.channels(),
                                  static_cast<std::size_t>(x1 - x0) * img.channels());
    std::copy(src.begin(), src.end(), out.row(y - y0).begin());
  }
  return out;
}

/// Sets every pixel inside `r` (clipped) to `value` on all channels.
inline void fill_rect(Raster& img, Rect r, std::uint8_t value) {
  const int x0 = std::max(0, r.x), y0 = std::max(0, r.y);
  const int x1 = std::min(img.width(), r.right()), y1 = std::min(img.height(), r.bottom());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < img.channels(); ++c) img.at(x, y, c) = value;
    }
  }
}

}  // namespace ocrwb
