// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ffm/detection.hpp"
#include "ffm/error.hpp"
#include "ffm/geometry.hpp"

namespace ffm {

inline constexpr std::string_view kPersonClass = "person";

/**
 * @brief Affine body proportions mapping a part box to a whole-body box.
 *
 * whole.cx = part.cx + dx_factor * part.w
 * whole.cy = part.cy + dy_factor * part.h
 * whole.w  = w_factor * part.w
 * whole.h  = h_factor * part.h
 */
struct RestoreRule {
  std::string part_class;
  double dy_factor = 0.0;
  double dx_factor = 0.0;
  double w_factor = 1.0;
  double h_factor = 1.0;

  friend bool operator==(const RestoreRule &, const RestoreRule &) = default;
};

/// Head sits two head-heights above the body center; body is 2x wider, 5x taller.
inline RestoreRule head_rule() { return {"head", 2.0, 0.0, 2.0, 5.0}; }

/// Legs occupy the lower half of the body, at 3/4 of its width.
inline RestoreRule leg_rule() { return {"leg", -0.5, 0.0, 4.0 / 3.0, 2.0}; }

inline std::vector<RestoreRule> default_rules() { return {head_rule(), leg_rule()}; }

/// Which member of a matched pair survives when both have equal confidence.
/// "head" means the first candidate set passed to fuse(), "leg" the second.
enum class TieBreak { prefer_head, prefer_leg, prefer_higher_conf };

struct FusionConfig {
  double iou_threshold = 0.5;
  TieBreak tie_break = TieBreak::prefer_head;
  bool strict_classes = false;
};

struct NmsParams {
  double iou_thr = 0.45;
  double conf_thr = 0.25;
};

struct Classified {
  std::map<std::string, std::vector<Detection>> parts;
  /// Detections whose class has no rule (lenient mode only).
  std::vector<Detection> passthrough;
};

namespace detail {

inline void stable_rank(std::vector<Detection> &dets) {
  std::stable_sort(dets.begin(), dets.end(), ranks_before);
}

inline void check_unit_interval(double v, const char *what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw error(std::string(what) + " must lie in [0, 1]");
}

} // namespace detail

/// Partitions detections by class name. Every rule must name a distinct class.
inline Classified classify(const std::vector<Detection> &dets,
                           const std::vector<RestoreRule> &rules, bool strict_classes) {
  std::set<std::string_view> known;
  for (const auto &r : rules) {
    if (!known.insert(r.part_class).second)
      throw error("duplicate restore rule for class '" + r.part_class + "'");
  }
  Classified out;
  for (const auto &d : dets) {
    if (known.contains(d.class_name)) {
      out.parts[d.class_name].push_back(d);
    } else if (strict_classes) {
      throw unknown_class_error("no restore rule for class '" + d.class_name + "'");
    } else {
      out.passthrough.push_back(d);
    }
  }
  return out;
}

/// Maps a part detection to a whole-body candidate; confidence is unchanged.
inline Detection restore(const Detection &part, const RestoreRule &rule) {
  if (part.class_name != rule.part_class)
    throw mismatch_error("rule for '" + rule.part_class + "' applied to a '" +
                         part.class_name + "' detection");
  if (!(rule.w_factor > 0.0 && rule.h_factor > 0.0))
    throw error("restore rule for '" + rule.part_class + "' has non-positive size factor");
  const BBox &b = part.box;
  BBox whole(b.cx() + rule.dx_factor * b.w(), b.cy() + rule.dy_factor * b.h(),
             rule.w_factor * b.w(), rule.h_factor * b.h());
  return Detection(part.image_id, std::string(kPersonClass), whole, part.conf, part.extra);
}

/**
 * @brief One-to-one fusion of two sets of restored whole-body candidates.
 *
 * Cross-set pairs from the same image with IoU >= cfg.iou_threshold are
 * accepted greedily in order of descending IoU while both members are free.
 * Each accepted pair keeps only its higher-confidence member. Unmatched
 * candidates survive unchanged. Output is ranked by confidence.
 */
inline std::vector<Detection> fuse(std::vector<Detection> heads, std::vector<Detection> legs,
                                   const FusionConfig &cfg) {
  detail::check_unit_interval(cfg.iou_threshold, "fusion iou_threshold");
  detail::stable_rank(heads);
  detail::stable_rank(legs);

  struct Pair {
    double iou;
    std::size_t head;
    std::size_t leg;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    for (std::size_t j = 0; j < legs.size(); ++j) {
      if (heads[i].image_id != legs[j].image_id)
        continue;
      const double v = iou(heads[i].box, legs[j].box);
      if (v >= cfg.iou_threshold)
        pairs.push_back({v, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair &a, const Pair &b) {
    return std::tuple(-a.iou, a.head, a.leg) < std::tuple(-b.iou, b.head, b.leg);
  });

  std::vector<bool> head_used(heads.size(), false);
  std::vector<bool> leg_used(legs.size(), false);
  std::vector<Detection> out;
  for (const auto &p : pairs) {
    if (head_used[p.head] || leg_used[p.leg])
      continue;
    head_used[p.head] = true;
    leg_used[p.leg] = true;
    const Detection &h = heads[p.head];
    const Detection &l = legs[p.leg];
    bool keep_head;
    if (h.conf != l.conf)
      keep_head = h.conf > l.conf;
    else
      keep_head = cfg.tie_break != TieBreak::prefer_leg;
    out.push_back(keep_head ? h : l);
  }
  for (std::size_t i = 0; i < heads.size(); ++i)
    if (!head_used[i])
      out.push_back(heads[i]);
  for (std::size_t j = 0; j < legs.size(); ++j)
    if (!leg_used[j])
      out.push_back(legs[j]);
  detail::stable_rank(out);
  return out;
}

/// Greedy per-image, per-class non-maximum suppression.
inline std::vector<Detection> nms(std::vector<Detection> dets, double iou_thr, double conf_thr) {
  detail::check_unit_interval(iou_thr, "nms iou_thr");
  detail::check_unit_interval(conf_thr, "nms conf_thr");
  std::erase_if(dets, [&](const Detection &d) { return d.conf < conf_thr; });
  detail::stable_rank(dets);

  std::vector<bool> removed(dets.size(), false);
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (removed[i])
      continue;
    kept.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j) {
      if (removed[j] || dets[j].class_name != dets[i].class_name ||
          dets[j].image_id != dets[i].image_id)
        continue;
      if (iou(dets[i].box, dets[j].box) >= iou_thr)
        removed[j] = true;
    }
  }
  return kept;
}

inline std::vector<Detection> nms(std::vector<Detection> dets, const NmsParams &p) {
  return nms(std::move(dets), p.iou_thr, p.conf_thr);
}

namespace detail {

inline std::vector<Detection> run_ffm_one_image(std::vector<Detection> dets,
                                                const std::vector<RestoreRule> &rules,
                                                const FusionConfig &cfg, const NmsParams &np) {
  auto classified = classify(nms(std::move(dets), np), rules, cfg.strict_classes);

  std::optional<std::vector<Detection>> acc;
  for (const auto &rule : rules) {
    std::vector<Detection> restored;
    if (auto it = classified.parts.find(rule.part_class); it != classified.parts.end()) {
      restored.reserve(it->second.size());
      for (const auto &d : it->second)
        restored.push_back(restore(d, rule));
    }
    acc = acc ? fuse(std::move(*acc), std::move(restored), cfg) : std::move(restored);
  }
  std::vector<Detection> out = acc ? std::move(*acc) : std::vector<Detection>{};
  out.insert(out.end(), classified.passthrough.begin(), classified.passthrough.end());
  stable_rank(out);
  return out;
}

} // namespace detail

/**
 * @brief Full part-to-whole pipeline: nms, classify, restore, fuse.
 *
 * Candidate sets are fused in rule order, so with the default rules this is
 * fuse(restored heads, restored legs). Images are processed independently;
 * output is grouped by image id (ascending) and ranked by confidence within
 * each image. Lenient-mode passthrough detections are appended unchanged.
 */
inline std::vector<Detection> run_ffm(const std::vector<Detection> &dets,
                                      const std::vector<RestoreRule> &rules,
                                      const FusionConfig &cfg, const NmsParams &np = {}) {
  std::map<std::string, std::vector<Detection>> by_image;
  for (const auto &d : dets)
    by_image[d.image_id].push_back(d);
  std::vector<Detection> out;
  for (auto &[id, group] : by_image) {
    auto part = detail::run_ffm_one_image(std::move(group), rules, cfg, np);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

} // namespace ffm
