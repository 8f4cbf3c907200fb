// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <gtest/gtest.h>

#include "ffm/lr_schedule.hpp"

using namespace ffm::lr;

TEST(LrAt, PeakAtWarmupEnd) {
  const ScheduleConfig cfg;
  EXPECT_EQ(lr_at(cfg, 3), 0.01);
}

TEST(LrAt, FinalEpoch) {
  const ScheduleConfig cfg;
  EXPECT_EQ(lr_at(cfg, 49), cfg.lr_final());
}

TEST(LrAt, CosineMidpoint) {
  ScheduleConfig cfg;
  cfg.total_epochs = 24; // cosine segment 3..23, midpoint 13
  EXPECT_NEAR(lr_at(cfg, 13), (cfg.lr_peak + cfg.lr_final()) / 2, 1e-12);
}

TEST(LrAt, Warmup) {
  const ScheduleConfig cfg;
  EXPECT_EQ(lr_at(cfg, 0), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(cfg, 1), 0.01 / 3);
}

TEST(LrAt, OutOfRange) {
  EXPECT_THROW(lr_at(ScheduleConfig{}, 50), ffm::error);
}

TEST(ScheduleConfig, Validation) {
  ScheduleConfig c;
  c.warmup_epochs = 50;
  EXPECT_THROW(c.validate(), ffm::config_error);
  c = {};
  c.lr_start = 0.02;
  EXPECT_THROW(c.validate(), ffm::config_error);
  c = {};
  c.lr_final_fraction = 0;
  EXPECT_THROW(c.validate(), ffm::config_error);
  c = {};
  c.total_epochs = 0;
  EXPECT_THROW(c.validate(), ffm::config_error);
}

TEST(EmitSchedule, Degenerate) {
  ScheduleConfig c;
  c.total_epochs = 1;
  c.warmup_epochs = 0;
  const auto rows = emit_schedule(c);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].second, c.lr_peak);
}

TEST(EmitSchedule, Shape) {
  const ScheduleConfig cfg;
  const auto rows = emit_schedule(cfg);
  ASSERT_EQ(rows.size(), 50u);
  for (std::size_t e = 1; e <= 3; ++e)
    EXPECT_GT(rows[e].second, rows[e - 1].second);
  for (std::size_t e = 4; e < 50; ++e)
    EXPECT_LT(rows[e].second, rows[e - 1].second);
  const double lo = std::min(cfg.lr_start, cfg.lr_final());
  for (const auto &[e, v] : rows) {
    EXPECT_GE(v, lo);
    EXPECT_LE(v, cfg.lr_peak);
  }
}

TEST(EmitSchedule, WarmupIndependentOfTail) {
  ScheduleConfig a, b;
  b.lr_final_fraction = 0.3;
  const auto ra = emit_schedule(a), rb = emit_schedule(b);
  for (std::size_t e = 0; e <= 3; ++e)
    EXPECT_EQ(ra[e].second, rb[e].second);
  EXPECT_NE(ra[10].second, rb[10].second);
}

TEST(EmitSchedule, ShapeAcrossConfigs) {
  for (std::size_t T = 2; T < 40; ++T) {
    for (std::size_t tw = 0; tw < T; ++tw) {
      ScheduleConfig c;
      c.total_epochs = T;
      c.warmup_epochs = tw;
      c.lr_start = 0.001;
      const auto rows = emit_schedule(c);
      for (std::size_t e = 1; e < T; ++e) {
        if (e <= tw)
          EXPECT_GT(rows[e].second, rows[e - 1].second) << T << " " << tw << " " << e;
        else
          EXPECT_LT(rows[e].second, rows[e - 1].second) << T << " " << tw << " " << e;
      }
      EXPECT_EQ(rows[tw].second, c.lr_peak);
    }
  }
}
