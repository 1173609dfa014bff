/**********************************************************************
 * File:        test_formkit.cpp
 * Description: Template layout, fiducial registration and slot extraction.
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

#include <cmath>

#include "ocrwb/formkit.hpp"
#include "test_util.hpp"

namespace ocrwb::formkit {
namespace {

using imaging::Affine;

std::vector<std::string> sentences(int n) {
  static const char* pool[] = {"ܐܒܓ ܕܗ", "ܘܙ ܚܛܝ", "ܟܠܡ ܢ", "ܣܥ ܦܨܩ", "ܪܫ ܬܐ"};
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.emplace_back(pool[i % 5]);
  return out;
}

// Expected axis-aligned box of a slot interior under x' = T(s * x).
Rect expected_rect(const SlotBox& s, double scale, const std::function<void(double, double, double&, double&)>& T,
                   double inset = 0.02) {
  double lo_x = 1e18, lo_y = 1e18, hi_x = -1e18, hi_y = -1e18;
  for (double fx : {inset, 1 - inset}) {
    for (double fy : {inset, 1 - inset}) {
      double px, py;
      T((s.x_mm + fx * s.w_mm) * scale, (s.y_mm + fy * s.h_mm) * scale, px, py);
      lo_x = std::min(lo_x, px), hi_x = std::max(hi_x, px);
      lo_y = std::min(lo_y, py), hi_y = std::max(hi_y, py);
    }
  }
  const int x = static_cast<int>(std::lround(lo_x)), y = static_cast<int>(std::lround(lo_y));
  return {x, y, static_cast<int>(std::lround(hi_x)) - x, static_cast<int>(std::lround(hi_y)) - y};
}

int worst_offset(const Rect& a, const Rect& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.right() - b.right()),
                   std::abs(a.bottom() - b.bottom())});
}

// Writes a short line of "handwriting" inside a slot.
void fill_slot(Raster& page, const SlotBox& s, double scale) {
  const Rect r = mm_rect_to_px(s.x_mm, s.y_mm, s.w_mm, s.h_mm, scale);
  fill_rect(page, {r.x + r.w / 3, r.y + r.h / 4, r.w / 3, r.h / 3}, 0);
}

TEST(Layout, FullAndSingleSentence) {
  const auto t = layout_template(sentences(20));
  ASSERT_EQ(t.slots.size(), 20u);
  EXPECT_NO_THROW(t.validate());
  for (std::size_t i = 0; i < t.slots.size(); ++i) {
    EXPECT_EQ(t.slots[i].slot_id, static_cast<int>(i) + 1);
    EXPECT_DOUBLE_EQ(t.slots[i].x_mm, 20);
    EXPECT_DOUBLE_EQ(t.slots[i].w_mm, 170);
    EXPECT_LE(t.slots[i].y_mm + t.slots[i].h_mm, 297 - 20 + 1e-9);
  }
  const auto one = layout_template(sentences(1));
  ASSERT_EQ(one.slots.size(), 1u);
  EXPECT_DOUBLE_EQ(one.slots[0].h_mm, t.slots[0].h_mm);
}

TEST(Layout, Errors) {
  try {
    layout_template(sentences(21));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CapacityExceeded);
  }
  try {
    layout_template({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(Descriptor, JsonRoundTripAndValidation) {
  const auto t = layout_template(sentences(4));
  EXPECT_EQ(template_from_json(to_json(t)), t);
  auto bad = t;
  bad.slots[1].y_mm = bad.slots[0].y_mm + 1;
  EXPECT_THROW(bad.validate(), Error);
  bad = t;
  bad.slots[0].w_mm = 500;
  EXPECT_THROW(bad.validate(), Error);
  bad = t;
  std::swap(bad.fiducials[0], bad.fiducials[3]);
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Render, PageSizeAndFiducials) {
  const auto r = render_template(sentences(3));
  EXPECT_EQ(r.page.width(), 2480);
  EXPECT_EQ(r.page.height(), 3508);
  const double s = px_per_mm(300);
  for (const auto& f : r.descriptor.fiducials) {
    EXPECT_EQ(r.page.at(static_cast<int>(f.x * s), static_cast<int>(f.y * s)), 0);
  }
  // Slot interiors are blank on the printed form.
  for (const auto& slot : r.descriptor.slots) {
    const Rect in = mm_rect_to_px(slot.x_mm + 1, slot.y_mm + 1, slot.w_mm - 2, slot.h_mm - 2, s);
    EXPECT_DOUBLE_EQ(imaging::ink_ratio(crop(r.page, in)), 0.0);
  }
}

TEST(Register, SelfRenderedFormIsExact) {
  const auto r = render_template(sentences(20));
  const ScanRegistration reg = register_scan(r.page, r.descriptor);
  EXPECT_EQ(reg.fiducials_found, 4);
  EXPECT_LT(reg.residual_px, 1.0);
  EXPECT_NEAR(reg.dpi, 300, 1.0);
  const double s = px_per_mm(300);
  const auto crops = extract_boxes(r.page, r.descriptor, reg);
  ASSERT_EQ(crops.size(), 20u);
  auto identity = [](double x, double y, double& ox, double& oy) { ox = x, oy = y; };
  for (std::size_t i = 0; i < crops.size(); ++i) {
    EXPECT_LE(worst_offset(crops[i].bounds, expected_rect(r.descriptor.slots[i], s, identity)), 2);
    EXPECT_TRUE(crops[i].empty);
  }
}

TEST(Register, TranslatedAndRotatedScan) {
  auto r = render_template(sentences(20));
  const double s = px_per_mm(300);
  fill_slot(r.page, r.descriptor.slots[3], s);
  const double theta = 0.5 * M_PI / 180, cx = r.page.width() / 2.0, cy = r.page.height() / 2.0;
  auto T = [&](double x, double y, double& ox, double& oy) {
    const double dx = x - cx, dy = y - cy;
    ox = cx + std::cos(theta) * dx - std::sin(theta) * dy + 40;
    oy = cy + std::sin(theta) * dx + std::cos(theta) * dy + 25;
  };
  const Affine fwd = Affine::translation(40, 25).compose(Affine::rotation_about(0.5, cx, cy));
  const Raster scan = imaging::warp_affine(r.page, fwd, r.page.width(), r.page.height(), 255);
  const auto crops = extract_boxes(scan, r.descriptor, register_scan(scan, r.descriptor));
  ASSERT_EQ(crops.size(), 20u);
  for (std::size_t i = 0; i < crops.size(); ++i) {
    EXPECT_LE(worst_offset(crops[i].bounds, expected_rect(r.descriptor.slots[i], s, T)), 3) << i;
    EXPECT_EQ(crops[i].empty, i != 3) << i;
  }
}

TEST(Register, ThreeFiducialsSuffice) {
  auto r = render_template(sentences(2));
  const double s = px_per_mm(300);
  const auto& f = r.descriptor.fiducials[3];
  fill_rect(r.page, mm_rect_to_px(f.x - 5, f.y - 5, 10, 10, s), 255);
  const auto reg = register_scan(r.page, r.descriptor);
  EXPECT_EQ(reg.fiducials_found, 3);
  EXPECT_NEAR(reg.dpi, 300, 1.0);
}

TEST(Register, BlankPageHasNoFiducials) {
  const auto t = layout_template(sentences(2));
  try {
    register_scan(Raster(2480, 3508, 1, 255), t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FiducialsNotFound);
  }
}

TEST(Register, FitAffineRecoversKnownTransform) {
  const Affine truth{2.0, 0.3, 10, -0.2, 1.5, 4};
  std::vector<PointMm> from = {{0, 0}, {100, 0}, {0, 100}, {100, 100}, {50, 20}}, to;
  for (const auto& p : from) {
    double x, y;
    truth.apply(p.x, p.y, x, y);
    to.push_back({x, y});
  }
  const Affine fit = fit_affine(from, to);
  EXPECT_NEAR(fit.a, 2.0, 1e-9);
  EXPECT_NEAR(fit.b, 0.3, 1e-9);
  EXPECT_NEAR(fit.c, 10, 1e-9);
  EXPECT_NEAR(fit.d, -0.2, 1e-9);
  EXPECT_NEAR(fit.e, 1.5, 1e-9);
  EXPECT_NEAR(fit.f, 4, 1e-9);
  EXPECT_THROW(fit_affine({{0, 0}, {1, 1}, {2, 2}}, {{0, 0}, {1, 1}, {2, 2}}), Error);
}

TEST(Extract, DpiFallbackAndOutOfBounds) {
  const auto r = render_template(sentences(5));
  const auto crops = extract_boxes(r.page, r.descriptor, registration_from_dpi(300));
  EXPECT_EQ(crops.size(), 5u);
  EXPECT_THROW(registration_from_dpi(0), Error);
  try {
    extract_boxes(crop(r.page, {0, 0, 1200, 1600}), r.descriptor, registration_from_dpi(300));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SlotOutOfBounds);
  }
}

TEST(Extract, InkedSlotIsNotEmpty) {
  auto r = render_template(sentences(2));
  fill_slot(r.page, r.descriptor.slots[0], px_per_mm(300));
  const auto crops = extract_boxes(r.page, r.descriptor, register_scan(r.page, r.descriptor));
  EXPECT_FALSE(crops[0].empty);
  EXPECT_GT(crops[0].ink_ratio, 0.05);
  EXPECT_TRUE(crops[1].empty);
}

}  // namespace
}  // namespace ocrwb::formkit
