// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <fmt/core.h>

#include "ffm/detection.hpp"
#include "ffm/error.hpp"
#include "ffm/geometry.hpp"
#include "ffm/pipeline.hpp"
#include "ffm/random.hpp"

/**
 * Synthetic occlusion scenes. Pedestrians are boxes of fixed aspect ratio;
 * head and leg boxes are derived from the body by inverting the restore
 * proportions, so a perfect part detector plus restore reproduces the body
 * exactly. Rectangular occluders hide parts of bodies; a part (or the body,
 * for the whole-body baseline) is detected iff enough of it stays visible.
 */
namespace ffm::sim {

struct Pedestrian {
  std::size_t id = 0;
  BBox body;
};

struct Occluder {
  BBox box;
};

struct SceneConfig {
  double img_w = 1024.0;
  double img_h = 512.0;
  std::size_t n_pedestrians = 4;
  double height_min = 80.0;
  double height_max = 240.0;
  double body_aspect = 0.41;
  double occlusion_rate = 0.4;
  double visibility_threshold = 0.5;
  double noise_eta = 0.02;
  double conf_base = 0.9;
  /// Confidence lost per unit of hidden area fraction.
  double conf_penalty = 0.3;
  double conf_noise = 0.05;
  /// Place occluder centers in the lower `occluder_lower_fraction` of the body.
  bool occluder_bias = true;
  double occluder_lower_fraction = 0.6;
  /// Occluder size as fractions of the occluded body's width and height.
  double occluder_w_min = 0.6;
  double occluder_w_max = 1.4;
  double occluder_h_min = 0.3;
  double occluder_h_max = 0.8;
  /// Bodies of different pedestrians never overlap more than this.
  double max_overlap_iou = 0.3;
  std::size_t max_retries = 1000;
  std::uint64_t seed = 0;
  std::string image_id = "sim/000000";

  void validate() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!(img_w > 0.0))
      throw config_error("img_w", "must be positive");
    if (!(img_h > 0.0))
      throw config_error("img_h", "must be positive");
    if (!(height_min > 0.0))
      throw config_error("height_range", "lower bound must be positive");
    if (!(height_max >= height_min))
      throw config_error("height_range", "upper bound must be >= lower bound");
    if (!(height_max <= img_h))
      throw config_error("height_range", "upper bound exceeds image height");
    if (!(body_aspect > 0.0) || body_aspect * height_max > img_w)
      throw config_error("body_aspect", "must be positive and fit the image width");
    if (!in01(occlusion_rate))
      throw config_error("occlusion_rate", "must lie in [0, 1]");
    if (!(visibility_threshold > 0.0 && visibility_threshold <= 1.0))
      throw config_error("visibility_threshold", "must lie in (0, 1]");
    if (!(noise_eta >= 0.0 && noise_eta < 0.5))
      throw config_error("noise_eta", "must lie in [0, 0.5)");
    if (!(conf_base > 0.0 && conf_base <= 1.0))
      throw config_error("conf_base", "must lie in (0, 1]");
    if (!(conf_penalty >= 0.0))
      throw config_error("conf_penalty", "must be >= 0");
    if (!(conf_noise >= 0.0))
      throw config_error("conf_noise", "must be >= 0");
    if (!(occluder_lower_fraction > 0.0 && occluder_lower_fraction <= 1.0))
      throw config_error("occluder_lower_fraction", "must lie in (0, 1]");
    if (!(occluder_w_min > 0.0 && occluder_w_max >= occluder_w_min))
      throw config_error("occluder_width_range", "must be a positive [min, max] pair");
    if (!(occluder_h_min > 0.0 && occluder_h_max >= occluder_h_min))
      throw config_error("occluder_height_range", "must be a positive [min, max] pair");
    if (!in01(max_overlap_iou))
      throw config_error("max_overlap_iou", "must lie in [0, 1]");
    if (max_retries == 0)
      throw config_error("max_retries", "must be >= 1");
    if (image_id.empty())
      throw config_error("image_id", "must be non-empty");
  }
};

/// Visible fractions of one pedestrian's boxes.
struct Visibility {
  double head = 1.0;
  double leg = 1.0;
  double body = 1.0;
};

struct Scene {
  SceneConfig config;
  std::vector<Pedestrian> pedestrians;
  std::vector<Occluder> occluders;
  std::vector<Visibility> visibility;   // one per pedestrian
  std::vector<GroundTruth> body_gts;    // one per pedestrian, class "person"
  std::vector<GroundTruth> part_gts;    // head then leg, per pedestrian
  std::vector<Detection> part_dets;     // emitted "head" / "leg" detections
  std::vector<Detection> body_dets;     // whole-body baseline, class "person"
};

/// Inverse of the head restore rule: top fifth of the body, half its width.
inline BBox derive_head(const BBox &body) {
  return BBox(body.cx(), body.cy() - 2.0 * body.h() / 5.0, body.w() / 2.0, body.h() / 5.0);
}

/// Inverse of the leg restore rule: lower half of the body, 3/4 of its width.
inline BBox derive_leg(const BBox &body) {
  return BBox(body.cx(), body.cy() + body.h() / 4.0, 3.0 * body.w() / 4.0, body.h() / 2.0);
}

/**
 * @brief Fraction of `part` not covered by the union of the occluders.
 *
 * Exact union area by coordinate compression over the clipped occluders.
 */
inline double visibility(const BBox &part, const std::vector<Occluder> &occluders) {
  std::vector<Corners> rects;
  for (const auto &o : occluders) {
    const Corners c{std::max(o.box.x1(), part.x1()), std::max(o.box.y1(), part.y1()),
                    std::min(o.box.x2(), part.x2()), std::min(o.box.y2(), part.y2())};
    if (c.x2 > c.x1 && c.y2 > c.y1)
      rects.push_back(c);
  }
  if (rects.empty())
    return 1.0;
  std::vector<double> xs, ys;
  for (const auto &r : rects) {
    xs.insert(xs.end(), {r.x1, r.x2});
    ys.insert(ys.end(), {r.y1, r.y2});
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  double covered = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double mx = 0.5 * (xs[i] + xs[i + 1]);
      const double my = 0.5 * (ys[j] + ys[j + 1]);
      for (const auto &r : rects) {
        if (mx > r.x1 && mx < r.x2 && my > r.y1 && my < r.y2) {
          covered += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
          break;
        }
      }
    }
  }
  return std::clamp(1.0 - covered / part.area(), 0.0, 1.0);
}

namespace detail {

/// Independent zero-mean noise on each coordinate, sigma proportional to the
/// matching dimension. Sizes are kept strictly positive.
inline BBox perturb(const BBox &b, double eta, Rng &rng) {
  const double ncx = rng.normal(), ncy = rng.normal(), nw = rng.normal(), nh = rng.normal();
  const double w = std::max(b.w() * (1.0 + eta * nw), 0.05 * b.w());
  const double h = std::max(b.h() * (1.0 + eta * nh), 0.05 * b.h());
  return BBox(b.cx() + eta * b.w() * ncx, b.cy() + eta * b.h() * ncy, w, h);
}

inline double confidence(const SceneConfig &cfg, double vis, Rng &rng) {
  const double c = cfg.conf_base - cfg.conf_penalty * (1.0 - vis) + cfg.conf_noise * rng.normal();
  return std::clamp(c, 1e-3, 1.0);
}

} // namespace detail

/**
 * @brief Builds one scene; a pure function of the config (seed included).
 *
 * Draw order: pedestrians (with placement retries), then per pedestrian an
 * occlusion decision and occluder, then per pedestrian head, leg and body
 * emissions (box noise then confidence noise, drawn whether or not the box is
 * emitted so that emission does not shift later draws).
 */
inline Scene generate(const SceneConfig &cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Scene scene;
  scene.config = cfg;

  for (std::size_t i = 0; i < cfg.n_pedestrians; ++i) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      const double h = rng.uniform(cfg.height_min, cfg.height_max);
      const double w = cfg.body_aspect * h;
      const double cx = rng.uniform(w / 2.0, cfg.img_w - w / 2.0);
      const double cy = rng.uniform(h / 2.0, cfg.img_h - h / 2.0);
      const BBox body(cx, cy, w, h);
      const bool clear = std::all_of(
          scene.pedestrians.begin(), scene.pedestrians.end(),
          [&](const Pedestrian &p) { return iou(p.body, body) <= cfg.max_overlap_iou; });
      if (clear) {
        scene.pedestrians.push_back({i, body});
        placed = true;
      }
    }
    if (!placed)
      throw generation_error(i, "no admissible placement after " +
                                    std::to_string(cfg.max_retries) + " attempts");
  }

  for (const auto &p : scene.pedestrians) {
    const bool occluded = rng.bernoulli(cfg.occlusion_rate);
    const double fw = rng.uniform(cfg.occluder_w_min, cfg.occluder_w_max);
    const double fh = rng.uniform(cfg.occluder_h_min, cfg.occluder_h_max);
    const double ux = rng.uniform();
    const double uy = rng.uniform();
    if (!occluded)
      continue;
    const BBox &b = p.body;
    const double lo = cfg.occluder_bias ? b.y2() - cfg.occluder_lower_fraction * b.h() : b.y1();
    const BBox box(b.x1() + ux * b.w(), lo + uy * (b.y2() - lo), fw * b.w(), fh * b.h());
    scene.occluders.push_back({clip_to_image(box, cfg.img_w, cfg.img_h)});
  }

  for (const auto &p : scene.pedestrians) {
    const BBox head = derive_head(p.body);
    const BBox leg = derive_leg(p.body);
    const Visibility vis{visibility(head, scene.occluders), visibility(leg, scene.occluders),
                         visibility(p.body, scene.occluders)};
    scene.visibility.push_back(vis);
    scene.body_gts.push_back({cfg.image_id, std::string(kPersonClass), p.body, false});
    scene.part_gts.push_back({cfg.image_id, "head", head, false});
    scene.part_gts.push_back({cfg.image_id, "leg", leg, false});

    const std::pair<const char *, std::pair<BBox, double>> parts[] = {
        {"head", {head, vis.head}}, {"leg", {leg, vis.leg}}};
    for (const auto &[cls, bv] : parts) {
      const BBox noisy = detail::perturb(bv.first, cfg.noise_eta, rng);
      const double conf = detail::confidence(cfg, bv.second, rng);
      if (bv.second >= cfg.visibility_threshold)
        scene.part_dets.emplace_back(cfg.image_id, cls, noisy, conf);
    }
    const BBox noisy = detail::perturb(p.body, cfg.noise_eta, rng);
    const double conf = detail::confidence(cfg, vis.body, rng);
    if (vis.body >= cfg.visibility_threshold)
      scene.body_dets.emplace_back(cfg.image_id, std::string(kPersonClass), noisy, conf);
  }
  return scene;
}

/// Scene i uses seed base.seed + i and image id "<sequence>/<i, 6 digits>".
inline std::vector<Scene> generate_many(const SceneConfig &base, std::size_t n_scenes,
                                        const std::string &sequence = "sim") {
  std::vector<Scene> scenes;
  scenes.reserve(n_scenes);
  for (std::size_t i = 0; i < n_scenes; ++i) {
    SceneConfig cfg = base;
    cfg.seed = base.seed + i;
    cfg.image_id = fmt::format("{}/{:06d}", sequence, i);
    scenes.push_back(generate(cfg));
  }
  return scenes;
}

} // namespace ffm::sim
