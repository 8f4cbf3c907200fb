// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "ffm/error.hpp"
#include "ffm/geometry.hpp"

/**
 * Box regression losses.
 *
 * Wise-IoU (v1): L = R * (1 - IoU), R = exp(d^2 / D), where d is the distance
 * between box centers and D = Wg^2 + Hg^2 is the squared diagonal of the
 * smallest enclosing box. D is treated as a constant when differentiating.
 */
namespace ffm::loss {

struct BoxPair {
  BBox pred;
  BBox gt;
};

/// dL/d(cx, cy, w, h) of the predicted box.
using Gradient = std::array<double, 4>;

inline double iou_loss(const BoxPair &p) { return 1.0 - iou(p.pred, p.gt); }

/// The distance attention factor R >= 1.
inline double wiou_factor(const BoxPair &p) {
  const BBox enc = enclosing_box(p.pred, p.gt);
  const double dx = p.pred.cx() - p.gt.cx();
  const double dy = p.pred.cy() - p.gt.cy();
  const double diag2 = enc.w() * enc.w() + enc.h() * enc.h();
  return std::exp((dx * dx + dy * dy) / diag2);
}

inline double wiou_loss(const BoxPair &p) { return wiou_factor(p) * iou_loss(p); }

namespace detail {

/// Derivative of min(a, b) with respect to a; 1/2 on a tie.
inline double dmin(double a, double b) noexcept { return a < b ? 1.0 : (a > b ? 0.0 : 0.5); }
/// Derivative of max(a, b) with respect to a; 1/2 on a tie.
inline double dmax(double a, double b) noexcept { return a > b ? 1.0 : (a < b ? 0.0 : 0.5); }

/// Gradient of IoU(pred, gt) with respect to (cx, cy, w, h) of pred.
inline Gradient iou_gradient(const BoxPair &p) {
  const BBox &a = p.pred;
  const BBox &g = p.gt;
  const double iw = std::min(a.x2(), g.x2()) - std::max(a.x1(), g.x1());
  const double ih = std::min(a.y2(), g.y2()) - std::max(a.y1(), g.y1());
  if (!(iw > 0.0 && ih > 0.0))
    throw boundary_error("IoU gradient undefined: boxes do not overlap");

  const double ax = dmin(a.x2(), g.x2());
  const double bx = dmax(a.x1(), g.x1());
  const double ay = dmin(a.y2(), g.y2());
  const double by = dmax(a.y1(), g.y1());

  // d(iw)/d(cx, w) and d(ih)/d(cy, h)
  const double diw_dcx = ax - bx;
  const double diw_dw = 0.5 * (ax + bx);
  const double dih_dcy = ay - by;
  const double dih_dh = 0.5 * (ay + by);

  const double inter = iw * ih;
  const double uni = a.area() + g.area() - inter;
  const std::array<double, 4> dinter{ih * diw_dcx, iw * dih_dcy, ih * diw_dw, iw * dih_dh};
  const std::array<double, 4> darea{0.0, 0.0, a.h(), a.w()};
  Gradient out{};
  for (int k = 0; k < 4; ++k) {
    const double duni = darea[k] - dinter[k];
    out[k] = (dinter[k] * uni - inter * duni) / (uni * uni);
  }
  return out;
}

} // namespace detail

/// Gradient of iou_loss. Where a pred edge coincides with a gt edge the
/// average of the one-sided derivatives is used.
inline Gradient iou_loss_gradient(const BoxPair &p) {
  auto g = detail::iou_gradient(p);
  for (auto &v : g)
    v = -v;
  return g;
}

/**
 * @brief Analytical gradient of wiou_loss with D held constant.
 *
 * Throws boundary_error when the boxes do not overlap (IoU is flat at 0 and
 * non-differentiable at touching edges).
 */
inline Gradient loss_gradient(const BoxPair &p) {
  const BBox enc = enclosing_box(p.pred, p.gt);
  const double diag2 = enc.w() * enc.w() + enc.h() * enc.h();
  const double dx = p.pred.cx() - p.gt.cx();
  const double dy = p.pred.cy() - p.gt.cy();
  const double r = std::exp((dx * dx + dy * dy) / diag2);
  const double one_minus_iou = iou_loss(p);
  const auto diou = detail::iou_gradient(p);
  return {r * (2.0 * dx / diag2) * one_minus_iou - r * diou[0],
          r * (2.0 * dy / diag2) * one_minus_iou - r * diou[1], -r * diou[2], -r * diou[3]};
}

} // namespace ffm::loss
