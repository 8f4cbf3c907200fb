// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <tuple>
#include <utility>

#include "ffm/error.hpp"
#include "ffm/geometry.hpp"

namespace ffm {

/**
 * @brief Class-tagged, confidence-scored box on one image.
 *
 * `extra` carries unrecognised record fields verbatim (a serialized JSON
 * object, or empty) so file pass-through does not lose them. The library
 * never interprets it.
 */
struct Detection {
  Detection(std::string image_id_, std::string class_name_, BBox box_, double conf_,
            std::string extra_ = {})
      : image_id(std::move(image_id_)), class_name(std::move(class_name_)), box(box_),
        conf(conf_), extra(std::move(extra_)) {
    if (class_name.empty())
      throw error("detection class name is empty");
    if (!(conf > 0.0 && conf <= 1.0))
      throw error("detection confidence must lie in (0, 1], got " + std::to_string(conf));
  }

  std::string image_id;
  std::string class_name;
  BBox box;
  double conf;
  std::string extra;

  friend bool operator==(const Detection &, const Detection &) = default;
};

struct GroundTruth {
  std::string image_id;
  std::string class_name;
  BBox box;
  bool ignore = false;

  friend bool operator==(const GroundTruth &, const GroundTruth &) = default;
};

/// Strict weak order: confidence descending, then box coordinates ascending.
/// Used wherever detections are ranked so equal scores sort reproducibly.
inline bool ranks_before(const Detection &a, const Detection &b) noexcept {
  if (a.conf != b.conf)
    return a.conf > b.conf;
  return std::tuple(a.box.cx(), a.box.cy(), a.box.w(), a.box.h()) <
         std::tuple(b.box.cx(), b.box.cy(), b.box.w(), b.box.h());
}

} // namespace ffm
