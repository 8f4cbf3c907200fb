// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ffm/detection.hpp"
#include "ffm/error.hpp"
#include "ffm/geometry.hpp"

namespace ffm::eval {

enum class Label { tp, fp, ignored };

/// A ranked detection outcome, the input to the AP computation.
struct ScoredLabel {
  double score;
  Label label;
};

struct PRPoint {
  double recall;
  double precision;
  double score_threshold;
};

enum class ApMode { all_point, eleven_point };

inline std::string_view to_string(ApMode m) {
  return m == ApMode::all_point ? "all-point" : "11-point";
}

/**
 * @brief Labels each detection TP, FP or ignored against the ground truth.
 *
 * Per image and class, detections are visited by descending confidence (ties
 * keep input order). A detection takes the unmatched, non-ignored GT of
 * highest IoU >= iou_thr; failing that, overlapping an ignore-flagged GT at
 * >= iou_thr marks it ignored; otherwise it is a false positive. The result is
 * aligned with `dets`.
 */
inline std::vector<Label> match(const std::vector<Detection> &dets,
                                const std::vector<GroundTruth> &gts, double iou_thr) {
  using Key = std::pair<std::string_view, std::string_view>;
  std::map<Key, std::vector<std::size_t>> gt_index;
  for (std::size_t g = 0; g < gts.size(); ++g)
    gt_index[{gts[g].image_id, gts[g].class_name}].push_back(g);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].conf > dets[b].conf; });

  std::vector<bool> gt_used(gts.size(), false);
  std::vector<Label> labels(dets.size(), Label::fp);
  for (std::size_t di : order) {
    const Detection &d = dets[di];
    auto it = gt_index.find({d.image_id, d.class_name});
    if (it == gt_index.end())
      continue;
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    bool hits_ignore = false;
    for (std::size_t g : it->second) {
      const double v = iou(d.box, gts[g].box);
      if (v < iou_thr)
        continue;
      if (gts[g].ignore) {
        hits_ignore = true;
        continue;
      }
      if (!gt_used[g] && v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best) {
      gt_used[*best] = true;
      labels[di] = Label::tp;
    } else if (hits_ignore) {
      labels[di] = Label::ignored;
    }
  }
  return labels;
}

/// Precision/recall after each distinct score threshold, highest first.
/// Detections sharing a score enter together; ignored labels are dropped.
inline std::vector<PRPoint> pr_curve(std::vector<ScoredLabel> labels, std::size_t n_gt) {
  if (n_gt == 0)
    throw undefined_metric_error("precision/recall undefined without ground truth");
  std::erase_if(labels, [](const ScoredLabel &s) { return s.label == Label::ignored; });
  std::stable_sort(labels.begin(), labels.end(),
                   [](const ScoredLabel &a, const ScoredLabel &b) { return a.score > b.score; });
  std::vector<PRPoint> pts;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < labels.size();) {
    const double score = labels[i].score;
    for (; i < labels.size() && labels[i].score == score; ++i)
      (labels[i].label == Label::tp ? tp : fp) += 1;
    pts.push_back({static_cast<double>(tp) / static_cast<double>(n_gt),
                   static_cast<double>(tp) / static_cast<double>(tp + fp), score});
  }
  return pts;
}

/**
 * @brief Area under the precision envelope of the PR curve.
 *
 * all_point: sum over recall increments of the maximum precision attained at
 * that recall or beyond. eleven_point: mean of that envelope sampled at
 * recall 0, 0.1, ..., 1.
 */
inline double average_precision(const std::vector<ScoredLabel> &labels, std::size_t n_gt,
                                ApMode mode = ApMode::all_point) {
  const auto pts = pr_curve(labels, n_gt);
  if (pts.empty())
    return 0.0;
  std::vector<double> env(pts.size());
  double running = 0.0;
  for (std::size_t k = pts.size(); k-- > 0;) {
    running = std::max(running, pts[k].precision);
    env[k] = running;
  }
  if (mode == ApMode::eleven_point) {
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double level = t / 10.0;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (pts[k].recall >= level) {
          sum += env[k];
          break;
        }
      }
    }
    return sum / 11.0;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    ap += (pts[k].recall - prev_recall) * env[k];
    prev_recall = pts[k].recall;
  }
  return ap;
}

struct ClassResult {
  std::string class_name;
  std::optional<double> ap; // empty when the class has no ground truth
  std::size_t n_gt = 0;
  std::size_t n_det = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
};

struct GroupResult {
  std::string group;
  std::vector<ClassResult> classes;
  std::optional<double> mean_ap;
};

struct EvalReport {
  double iou_thr = 0.5;
  ApMode mode = ApMode::all_point;
  std::vector<ClassResult> classes;
  std::optional<double> mean_ap;
  std::vector<GroupResult> groups;
};

/// Group of an image id: the text before the first '/', or "-" when absent.
inline std::string group_of(std::string_view image_id) {
  const auto slash = image_id.find('/');
  if (slash == std::string_view::npos)
    return "-";
  return std::string(image_id.substr(0, slash));
}

namespace detail {

inline std::vector<ClassResult> score_classes(const std::vector<Detection> &dets,
                                              const std::vector<Label> &labels,
                                              const std::vector<GroundTruth> &gts,
                                              const std::vector<std::size_t> &det_ids,
                                              const std::vector<std::size_t> &gt_ids,
                                              ApMode mode) {
  std::map<std::string, ClassResult> by_class;
  std::map<std::string, std::vector<ScoredLabel>> scored;
  for (std::size_t g : gt_ids) {
    auto &c = by_class[gts[g].class_name];
    c.class_name = gts[g].class_name;
    if (!gts[g].ignore)
      ++c.n_gt;
  }
  for (std::size_t d : det_ids) {
    auto &c = by_class[dets[d].class_name];
    c.class_name = dets[d].class_name;
    ++c.n_det;
    if (labels[d] == Label::tp)
      ++c.tp;
    else if (labels[d] == Label::fp)
      ++c.fp;
    scored[dets[d].class_name].push_back({dets[d].conf, labels[d]});
  }
  std::vector<ClassResult> out;
  for (auto &[name, c] : by_class) {
    if (c.n_gt > 0)
      c.ap = average_precision(scored[name], c.n_gt, mode);
    out.push_back(c);
  }
  return out;
}

inline std::optional<double> mean_of(const std::vector<ClassResult> &classes) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto &c : classes) {
    if (c.ap) {
      sum += *c.ap;
      ++n;
    }
  }
  if (n == 0)
    return std::nullopt;
  return sum / static_cast<double>(n);
}

} // namespace detail

/// Per-class AP over the whole run and per image group.
inline EvalReport evaluate_run(const std::vector<Detection> &dets,
                               const std::vector<GroundTruth> &gts, double iou_thr,
                               ApMode mode = ApMode::all_point) {
  EvalReport rep;
  rep.iou_thr = iou_thr;
  rep.mode = mode;
  const auto labels = match(dets, gts, iou_thr);

  std::vector<std::size_t> all_d(dets.size()), all_g(gts.size());
  std::iota(all_d.begin(), all_d.end(), std::size_t{0});
  std::iota(all_g.begin(), all_g.end(), std::size_t{0});
  rep.classes = detail::score_classes(dets, labels, gts, all_d, all_g, mode);
  rep.mean_ap = detail::mean_of(rep.classes);

  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
  for (std::size_t d = 0; d < dets.size(); ++d)
    groups[group_of(dets[d].image_id)].first.push_back(d);
  for (std::size_t g = 0; g < gts.size(); ++g)
    groups[group_of(gts[g].image_id)].second.push_back(g);
  for (const auto &[name, ids] : groups) {
    GroupResult gr;
    gr.group = name;
    gr.classes = detail::score_classes(dets, labels, gts, ids.first, ids.second, mode);
    gr.mean_ap = detail::mean_of(gr.classes);
    rep.groups.push_back(std::move(gr));
  }
  return rep;
}

} // namespace ffm::eval
