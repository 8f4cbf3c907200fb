// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ffm/error.hpp"

namespace ffm::lr {

/**
 * @brief Linear warmup followed by cosine annealing, per epoch.
 *
 * Epochs [0, warmup] ramp linearly from lr_start to lr_peak; from warmup to
 * total-1 the rate follows half a cosine down to lr_final_fraction * lr_peak.
 */
struct ScheduleConfig {
  std::size_t total_epochs = 50;
  std::size_t warmup_epochs = 3;
  double lr_peak = 0.01;
  double lr_start = 0.0;
  double lr_final_fraction = 0.01;

  double lr_final() const noexcept { return lr_final_fraction * lr_peak; }

  void validate() const {
    if (total_epochs == 0)
      throw config_error("total_epochs", "must be >= 1");
    if (warmup_epochs >= total_epochs)
      throw config_error("warmup_epochs", "must be < total_epochs");
    if (!(lr_peak > 0.0))
      throw config_error("lr_peak", "must be positive");
    if (!(lr_start >= 0.0 && lr_start <= lr_peak))
      throw config_error("lr_start", "must lie in [0, lr_peak]");
    if (!(lr_final_fraction > 0.0 && lr_final_fraction <= 1.0))
      throw config_error("lr_final_fraction", "must lie in (0, 1]");
  }
};

inline double lr_at(const ScheduleConfig &cfg, std::size_t epoch) {
  cfg.validate();
  if (epoch >= cfg.total_epochs)
    throw error("epoch " + std::to_string(epoch) + " outside [0, " +
                std::to_string(cfg.total_epochs) + ")");
  const std::size_t tw = cfg.warmup_epochs;
  // Both pieces meet at lr_peak; return it directly so the junction is exact.
  if (epoch == tw)
    return cfg.lr_peak;
  if (epoch < tw)
    return cfg.lr_start +
           (cfg.lr_peak - cfg.lr_start) * static_cast<double>(epoch) / static_cast<double>(tw);
  const double lr_f = cfg.lr_final();
  if (epoch == cfg.total_epochs - 1)
    return lr_f;
  const double t = static_cast<double>(epoch - tw) / static_cast<double>(cfg.total_epochs - 1 - tw);
  return lr_f + 0.5 * (cfg.lr_peak - lr_f) * (1.0 + std::cos(std::numbers::pi * t));
}

inline std::vector<std::pair<std::size_t, double>> emit_schedule(const ScheduleConfig &cfg) {
  cfg.validate();
  std::vector<std::pair<std::size_t, double>> rows;
  rows.reserve(cfg.total_epochs);
  for (std::size_t e = 0; e < cfg.total_epochs; ++e)
    rows.emplace_back(e, lr_at(cfg, e));
  return rows;
}

} // namespace ffm::lr
