// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <gtest/gtest.h>

#include "ffm/evaluator.hpp"
#include "ffm/pipeline.hpp"
#include "ffm/simulator.hpp"

using ffm::BBox;
using namespace ffm::sim;

namespace {

void expect_box_near(const BBox &a, const BBox &b, double tol) {
  EXPECT_NEAR(a.cx(), b.cx(), tol);
  EXPECT_NEAR(a.cy(), b.cy(), tol);
  EXPECT_NEAR(a.w(), b.w(), tol);
  EXPECT_NEAR(a.h(), b.h(), tol);
}

bool same_box(const BBox &a, const BBox &b, double tol) {
  return std::abs(a.cx() - b.cx()) <= tol && std::abs(a.cy() - b.cy()) <= tol &&
         std::abs(a.w() - b.w()) <= tol && std::abs(a.h() - b.h()) <= tol;
}

std::vector<ffm::Detection> ffm_of(const Scene &s) {
  return ffm::run_ffm(s.part_dets, ffm::default_rules(), {});
}

SceneConfig noise_free(double occlusion, std::uint64_t seed) {
  SceneConfig c;
  c.noise_eta = 0.0;
  c.occlusion_rate = occlusion;
  c.seed = seed;
  return c;
}

} // namespace

TEST(Derive, Examples) {
  EXPECT_EQ(derive_head(BBox(100, 70, 40, 50)), BBox(100, 50, 20, 10));
  EXPECT_EQ(derive_leg(BBox(100, 80, 40, 80)), BBox(100, 100, 30, 40));
  expect_box_near(derive_head(BBox(0, 0, 1, 1)), BBox(0, -0.4, 0.5, 0.2), 1e-15);
}

TEST(Derive, RoundTripsThroughRestore) {
  ffm::Rng rng(71);
  for (int t = 0; t < 1000; ++t) {
    const BBox b(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(1, 300), rng.uniform(1, 300));
    expect_box_near(ffm::restore(ffm::Detection("i", "head", derive_head(b), 0.5), ffm::head_rule()).box, b, 1e-9);
    expect_box_near(ffm::restore(ffm::Detection("i", "leg", derive_leg(b), 0.5), ffm::leg_rule()).box, b, 1e-9);
  }
}

TEST(Visibility, Examples) {
  const auto part = BBox::from_corners(0, 0, 10, 10);
  EXPECT_EQ(visibility(part, {}), 1.0);
  EXPECT_EQ(visibility(part, {{BBox::from_corners(-1, -1, 11, 11)}}), 0.0);
  EXPECT_DOUBLE_EQ(visibility(part, {{BBox::from_corners(0, 0, 5, 10)}, {BBox::from_corners(3, 0, 7, 10)}}), 0.3);
  EXPECT_EQ(visibility(part, {{BBox::from_corners(20, 20, 30, 30)}}), 1.0);
}

TEST(Visibility, MonotoneInOccluders) {
  ffm::Rng rng(72);
  for (int t = 0; t < 300; ++t) {
    const BBox part(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(1, 6), rng.uniform(1, 6));
    std::vector<Occluder> occ;
    double prev = visibility(part, occ);
    for (int k = 0; k < 6; ++k) {
      occ.push_back({BBox(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0.5, 5), rng.uniform(0.5, 5))});
      const double v = visibility(part, occ);
      EXPECT_LE(v, prev + 1e-12);
      EXPECT_GE(v, 0.0);
      prev = v;
    }
  }
}

TEST(Generate, Deterministic) {
  SceneConfig c;
  c.seed = 99;
  c.n_pedestrians = 6;
  const auto a = generate(c), b = generate(c);
  EXPECT_EQ(a.body_gts, b.body_gts);
  EXPECT_EQ(a.part_dets, b.part_dets);
  EXPECT_EQ(a.body_dets, b.body_dets);
  ASSERT_EQ(a.occluders.size(), b.occluders.size());
  for (std::size_t i = 0; i < a.occluders.size(); ++i)
    EXPECT_EQ(a.occluders[i].box, b.occluders[i].box);
  c.seed = 100;
  EXPECT_NE(generate(c).body_gts, a.body_gts);
}

TEST(Generate, StructuralInvariants) {
  SceneConfig base;
  for (const auto &s : generate_many(base, 20)) {
    ASSERT_EQ(s.pedestrians.size(), base.n_pedestrians);
    ASSERT_EQ(s.part_gts.size(), 2 * s.body_gts.size());
    for (std::size_t i = 0; i < s.pedestrians.size(); ++i) {
      const BBox &b = s.pedestrians[i].body;
      EXPECT_TRUE(ffm::contains(BBox::from_corners(0, 0, base.img_w, base.img_h), b));
      EXPECT_NEAR(b.w() / b.h(), base.body_aspect, 1e-12);
      EXPECT_EQ(s.part_gts[2 * i].box, derive_head(b));
      EXPECT_EQ(s.part_gts[2 * i + 1].box, derive_leg(b));
      for (std::size_t j = 0; j < i; ++j)
        EXPECT_LE(ffm::iou(b, s.pedestrians[j].body), base.max_overlap_iou);
    }
    for (const auto &d : s.part_dets)
      EXPECT_TRUE(d.conf > 0.0 && d.conf <= 1.0);
  }
}

TEST(Generate, NoiseFreeUnoccludedRecoversEveryBody) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = generate(noise_free(0.0, seed));
    ASSERT_TRUE(s.occluders.empty());
    ASSERT_EQ(s.part_dets.size(), s.part_gts.size());
    for (std::size_t i = 0; i < s.part_dets.size(); ++i) {
      EXPECT_EQ(s.part_dets[i].box, s.part_gts[i].box);
      EXPECT_EQ(s.part_dets[i].class_name, s.part_gts[i].class_name);
    }
    const auto out = ffm_of(s);
    ASSERT_EQ(out.size(), s.body_gts.size()) << "seed " << seed;
    for (const auto &g : s.body_gts)
      EXPECT_EQ(std::count_if(out.begin(), out.end(), [&](const auto &d) { return same_box(d.box, g.box, 1e-9); }), 1);
    EXPECT_EQ(ffm::eval::evaluate_run(out, s.body_gts, 0.5).mean_ap, 1.0);
  }
}

TEST(Generate, NoiseFreeOccludedRecoveryAndBaselineMisses) {
  std::size_t body_misses = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto cfg = noise_free(0.4, seed);
    const auto s = generate(cfg);
    const auto out = ffm_of(s);
    for (std::size_t i = 0; i < s.pedestrians.size(); ++i) {
      const auto &v = s.visibility[i];
      const BBox &b = s.pedestrians[i].body;
      if (v.head >= cfg.visibility_threshold || v.leg >= cfg.visibility_threshold) {
        EXPECT_TRUE(std::any_of(out.begin(), out.end(), [&](const auto &d) { return same_box(d.box, b, 1e-9); }))
            << "seed " << seed << " pedestrian " << i;
      }
      const bool body_hit =
          std::any_of(s.body_dets.begin(), s.body_dets.end(), [&](const auto &d) { return d.box == b; });
      EXPECT_EQ(body_hit, v.body >= cfg.visibility_threshold);
      body_misses += !body_hit;
    }
  }
  EXPECT_GT(body_misses, 0u);
}

TEST(Generate, OccludersFavourLowerBody) {
  SceneConfig c;
  c.occlusion_rate = 1.0;
  double head = 0, leg = 0;
  for (const auto &s : generate_many(c, 30)) {
    for (const auto &v : s.visibility) {
      head += v.head;
      leg += v.leg;
    }
  }
  EXPECT_GT(head, leg);
}

TEST(Generate, InfeasiblePlacementReportsIndex) {
  SceneConfig c;
  c.n_pedestrians = 50;
  c.height_min = c.height_max = 500;
  c.max_overlap_iou = 0.0;
  c.max_retries = 20;
  try {
    generate(c);
    FAIL() << "expected generation_error";
  } catch (const ffm::generation_error &e) {
    EXPECT_GT(e.index(), 0u);
    EXPECT_LT(e.index(), 50u);
  }
}

TEST(SceneConfig, Validation) {
  SceneConfig c;
  c.occlusion_rate = 1.5;
  EXPECT_THROW(c.validate(), ffm::config_error);
  c = {};
  c.visibility_threshold = 0.0;
  EXPECT_THROW(c.validate(), ffm::config_error);
  c = {};
  c.height_max = 1000;
  EXPECT_THROW(c.validate(), ffm::config_error);
  c = {};
  c.occluder_h_min = 0.9;
  EXPECT_THROW(c.validate(), ffm::config_error);
  c = {};
  c.noise_eta = -0.1;
  EXPECT_THROW(c.validate(), ffm::config_error);
}

TEST(Generate, ZeroPedestrians) {
  SceneConfig c;
  c.n_pedestrians = 0;
  const auto s = generate(c);
  EXPECT_TRUE(s.body_gts.empty());
  EXPECT_TRUE(s.part_dets.empty());
}
