// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ffm/error.hpp"

namespace ffm {

/// Corner form of a box: [x1, x2] x [y1, y2], y grows downward.
struct Corners {
  double x1;
  double y1;
  double x2;
  double y2;
};

/**
 * @brief Axis-aligned box in center/size form, in real-valued pixels.
 *
 * Width and height are strictly positive and finite; a degenerate box cannot
 * be constructed. Corner coordinates are derived on demand.
 */
class BBox {
public:
  BBox(double cx, double cy, double w, double h) : cx_(cx), cy_(cy), w_(w), h_(h) {
    if (!(std::isfinite(cx) && std::isfinite(cy)))
      throw invalid_box_error("box center is not finite");
    if (!(std::isfinite(w) && std::isfinite(h) && w > 0.0 && h > 0.0))
      throw invalid_box_error("box width/height must be positive (got w=" +
                              std::to_string(w) + ", h=" + std::to_string(h) + ")");
  }

  static BBox from_corners(double x1, double y1, double x2, double y2) {
    return BBox(0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1);
  }
  static BBox from_corners(const Corners &c) { return from_corners(c.x1, c.y1, c.x2, c.y2); }

  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }
  double w() const noexcept { return w_; }
  double h() const noexcept { return h_; }

  double x1() const noexcept { return cx_ - 0.5 * w_; }
  double x2() const noexcept { return cx_ + 0.5 * w_; }
  double y1() const noexcept { return cy_ - 0.5 * h_; }
  double y2() const noexcept { return cy_ + 0.5 * h_; }
  Corners corners() const noexcept { return {x1(), y1(), x2(), y2()}; }

  double area() const noexcept { return w_ * h_; }

  friend bool operator==(const BBox &, const BBox &) = default;

private:
  double cx_;
  double cy_;
  double w_;
  double h_;
};

/// Area of the intersection of two boxes, 0 when they do not overlap.
inline double intersection_area(const BBox &a, const BBox &b) noexcept {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0)
    return 0.0;
  return iw * ih;
}

/// Intersection over union, in [0, 1]. Symmetric in its arguments; exactly 1
/// for identical boxes (all areas are taken from the same corner values).
inline double iou(const BBox &a, const BBox &b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0)
    return 0.0;
  auto corner_area = [](const BBox &x) { return (x.x2() - x.x1()) * (x.y2() - x.y1()); };
  const double uni = corner_area(a) + corner_area(b) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Smallest axis-aligned box containing both.
inline BBox enclosing_box(const BBox &a, const BBox &b) {
  if (a == b)
    return a;
  return BBox::from_corners(std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()),
                            std::max(a.x2(), b.x2()), std::max(a.y2(), b.y2()));
}

/// True when `inner` lies inside `outer` (boundaries included).
inline bool contains(const BBox &outer, const BBox &inner) noexcept {
  return outer.x1() <= inner.x1() && outer.y1() <= inner.y1() && outer.x2() >= inner.x2() &&
         outer.y2() >= inner.y2();
}

/// Intersects `b` with the image rectangle [0, img_w] x [0, img_h].
inline BBox clip_to_image(const BBox &b, double img_w, double img_h) {
  if (!(img_w > 0.0 && img_h > 0.0))
    throw invalid_box_error("image size must be positive");
  if (b.x1() >= 0.0 && b.y1() >= 0.0 && b.x2() <= img_w && b.y2() <= img_h)
    return b;
  const double x1 = std::max(b.x1(), 0.0);
  const double y1 = std::max(b.y1(), 0.0);
  const double x2 = std::min(b.x2(), img_w);
  const double y2 = std::min(b.y2(), img_h);
  if (!(x2 > x1 && y2 > y1))
    throw empty_box_error("box lies entirely outside the image");
  return BBox::from_corners(x1, y1, x2, y2);
}

} // namespace ffm
