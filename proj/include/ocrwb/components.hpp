/**********************************************************************
 * File:        components.hpp
 * Description: 8-connected component labelling over a binary mask.
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

#include <cstdint>
#include <vector>

#include "ocrwb/raster.hpp"

namespace ocrwb {

struct Component {
  int label = 0;  // 1-based, matches Labelling::labels
  Rect bbox;
  std::size_t area = 0;
  double cx = 0;  // centroid, pixel-center convention
  double cy = 0;

  double fill_ratio() const {
    return static_cast<double>(area) / (static_cast<double>(bbox.w) * bbox.h);
  }
};

struct Labelling {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;  // 0 = background
  std::vector<Component> components;

  std::int32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Labels nonzero pixels of a 1-channel mask, scanning row-major so the
/// component order is deterministic.
inline Labelling label_components(const Raster& mask) {
  Labelling out;
  out.width = mask.width();
  out.height = mask.height();
  out.labels.assign(static_cast<std::size_t>(mask.width()) * mask.height(), 0);
  std::vector<std::pair<int, int>> stack;
  std::int32_t next = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * mask.width() + x;
      if (!mask.at(x, y) || out.labels[idx]) continue;
      ++next;
      Component comp;
      comp.label = next;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      double sx = 0, sy = 0;
      out.labels[idx] = next;
      stack.clear();
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        auto [px, py] = stack.back();
        stack.pop_back();
        ++comp.area;
        sx += px + 0.5;
        sy += py + 0.5;
        x0 = std::min(x0, px);
        x1 = std::max(x1, px);
        y0 = std::min(y0, py);
        y1 = std::max(y1, py);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = px + dx, ny = py + dy;
            if (!mask.contains(nx, ny) || !mask.at(nx, ny)) continue;
            auto& l = out.labels[static_cast<std::size_t>(ny) * mask.width() + nx];
            if (l) continue;
            l = next;
            stack.emplace_back(nx, ny);
          }
        }
      }
      comp.bbox = Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
      comp.cx = sx / static_cast<double>(comp.area);
      comp.cy = sy / static_cast<double>(comp.area);
      out.components.push_back(comp);
    }
  }
  return out;
}

}  // namespace ocrwb
