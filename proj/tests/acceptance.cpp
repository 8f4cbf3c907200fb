// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "ffm/cli.hpp"
#include "oracles/brute_ap.hpp"
#include "oracles/finite_diff.hpp"

namespace fs = std::filesystem;
using ffm::BBox;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

const fs::path kSource = FFM_SOURCE_DIR;

// Measured margin on the criterion-4 scenes was 0.055 (FFM 0.995, body 0.940);
// pinned slightly below as a regression floor.
constexpr double kOcclusionMargin = 0.05;

Outcome round_trip() {
  ffm::Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const BBox b(rng.uniform(-2000, 2000), rng.uniform(-2000, 2000), rng.uniform(0.5, 800), rng.uniform(0.5, 800));
    const BBox h = ffm::restore(ffm::Detection("i", "head", ffm::sim::derive_head(b), 0.5), ffm::head_rule()).box;
    const BBox l = ffm::restore(ffm::Detection("i", "leg", ffm::sim::derive_leg(b), 0.5), ffm::leg_rule()).box;
    for (const BBox &r : {h, l})
      worst = std::max({worst, std::abs(r.cx() - b.cx()), std::abs(r.cy() - b.cy()), std::abs(r.w() - b.w()),
                        std::abs(r.h() - b.h())});
  }
  return {worst <= 1e-9, fmt::format("10000 boxes, max abs error {:.3g}", worst)};
}

Outcome ghost_formulas() {
  ffm::cost::LayerSpec g;
  g.kind = ffm::cost::LayerKind::ghost_conv;
  g.c1 = 64;
  g.c2 = 64;
  g.n = g.l = 3;
  g.s = 2;
  g.in_h = g.in_w = 20;
  const auto r = ffm::cost::speedup_ratio(g);
  bool ok = std::abs(r.exact - 128.0 / 65.0) <= 1e-12 && std::abs(r.approx - 128.0 / 65.0) <= 1e-12;

  ffm::Rng rng(2);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform(0, static_cast<double>(hi - lo + 1)));
  };
  std::size_t ratio_mismatch = 0;
  for (int t = 0; t < 100; ++t) {
    ffm::cost::LayerSpec s;
    s.kind = ffm::cost::LayerKind::ghost_conv;
    s.s = pick(1, 4);
    s.c1 = pick(1, 256);
    s.c2 = s.s * pick(1, 32);
    s.n = s.l = 2 * pick(0, 3) + 1;
    s.stride = pick(1, 2);
    s.in_h = s.in_w = pick(1, 40);
    const auto q = ffm::cost::speedup_ratio(s);
    ratio_mismatch += q.exact != q.approx;
  }
  ok = ok && ratio_mismatch == 0;

  // Observed MACs: random layers of every countable kind, then every unique
  // layer of the shipped model specs.
  std::size_t checked = 0, mac_mismatch = 0;
  for (int t = 0; t < 300; ++t) {
    ffm::cost::LayerSpec s;
    const int kind = t % 3;
    s.kind = kind == 0 ? ffm::cost::LayerKind::conv
                       : (kind == 1 ? ffm::cost::LayerKind::ghost_conv : ffm::cost::LayerKind::se);
    s.s = pick(1, 4);
    s.r = pick(1, 4);
    s.c1 = kind == 2 ? s.r * pick(1, 8) : pick(1, 16);
    s.c2 = kind == 2 ? s.c1 : s.s * pick(1, 8);
    s.n = 2 * pick(0, 2) + 1;
    s.l = 2 * pick(0, 2) + 1;
    s.stride = pick(1, 2);
    s.in_h = pick(1, 12);
    s.in_w = pick(1, 12);
    const auto [expected, observed] = ffm::cli::detail::verify_layer(s, 0, rng);
    ++checked;
    mac_mismatch += expected != observed;
  }
  for (const char *name : {"yolov5s-baseline", "yolov5s-se", "yolov5s-ghost-neck", "yolov5s-se-ghost-neck",
                           "yolov5s-se-ghost-neck-parts"}) {
    const auto model =
        ffm::io::model_spec_from_json(ffm::io::parse_json_file((kSource / "models" / (std::string(name) + ".json")).string()));
    for (const auto &[spec, shape] : ffm::cost::resolve(model)) {
      if (!ffm::cli::detail::verifiable(spec.kind))
        continue;
      const auto [expected, observed] = ffm::cli::detail::verify_layer(spec, 16, rng);
      ++checked;
      mac_mismatch += expected != observed;
    }
  }
  ok = ok && mac_mismatch == 0;
  return {ok, fmt::format("ratio {:.15f}/{:.15f}, {} l=n specs with exact != approx, {} MAC mismatches in {} layers",
                          r.exact, r.approx, ratio_mismatch, mac_mismatch, checked)};
}

Outcome table_deltas() {
  auto load = [](const char *name) {
    return ffm::io::model_spec_from_json(
        ffm::io::parse_json_file((kSource / "models" / (std::string(name) + ".json")).string()));
  };
  const auto base = load("yolov5s-baseline"), ghost = load("yolov5s-ghost-neck");
  bool ok = true;
  std::string detail;
  for (auto acct : {ffm::cost::NormAccounting::affine, ffm::cost::NormAccounting::fused}) {
    const auto b = ffm::cost::summarize(base, acct);
    const auto d = ffm::cost::compare(b, ffm::cost::summarize(ghost, acct));
    const double rel = std::abs(static_cast<double>(b.total_params) - 7012822.0) / 7012822.0;
    ok = ok && rel <= 0.02 && std::abs(d.param_reduction - 0.288) <= 0.02 &&
         std::abs(d.flops_reduction - 0.196) <= 0.02;
    detail += fmt::format("{}{}: {} params ({:+.2f}%), ghost-neck -{:.2f}% params -{:.2f}% MACs",
                          detail.empty() ? "" : "; ", ffm::io::to_string(acct), b.total_params,
                          100.0 * (static_cast<double>(b.total_params) / 7012822.0 - 1.0),
                          100.0 * d.param_reduction, 100.0 * d.flops_reduction);
  }
  return {ok, detail};
}

ffm::sim::SceneConfig occlusion_scenes() {
  ffm::sim::SceneConfig c;
  c.n_pedestrians = 4;
  c.occlusion_rate = 0.4;
  c.noise_eta = 0.02;
  c.seed = 7;
  return c;
}

Outcome occlusion_robustness() {
  std::vector<ffm::GroundTruth> gts;
  std::vector<ffm::Detection> parts, bodies;
  for (const auto &s : ffm::sim::generate_many(occlusion_scenes(), 50)) {
    gts.insert(gts.end(), s.body_gts.begin(), s.body_gts.end());
    parts.insert(parts.end(), s.part_dets.begin(), s.part_dets.end());
    bodies.insert(bodies.end(), s.body_dets.begin(), s.body_dets.end());
  }
  const auto fused = ffm::run_ffm(parts, ffm::default_rules(), {});
  const double ffm_ap = ffm::eval::evaluate_run(fused, gts, 0.5).mean_ap.value_or(0.0);
  const double body_ap = ffm::eval::evaluate_run(bodies, gts, 0.5).mean_ap.value_or(0.0);
  const bool ok = gts.size() == 200 && ffm_ap > body_ap && ffm_ap - body_ap >= kOcclusionMargin;
  return {ok, fmt::format("{} pedestrians, FFM AP {:.4f} vs body AP {:.4f}, margin {:.4f} (floor {})", gts.size(),
                          ffm_ap, body_ap, ffm_ap - body_ap, kOcclusionMargin)};
}

Outcome noise_free() {
  ffm::sim::SceneConfig c = occlusion_scenes();
  c.occlusion_rate = 0.0;
  c.noise_eta = 0.0;
  std::size_t unmatched = 0, n_gt = 0, n_out = 0;
  std::vector<ffm::GroundTruth> gts;
  std::vector<ffm::Detection> all;
  for (const auto &s : ffm::sim::generate_many(c, 50)) {
    const auto out = ffm::run_ffm(s.part_dets, ffm::default_rules(), {});
    n_out += out.size();
    n_gt += s.body_gts.size();
    for (const auto &g : s.body_gts) {
      const bool hit = std::any_of(out.begin(), out.end(), [&](const ffm::Detection &d) {
        return std::abs(d.box.cx() - g.box.cx()) <= 1e-9 && std::abs(d.box.cy() - g.box.cy()) <= 1e-9 &&
               std::abs(d.box.w() - g.box.w()) <= 1e-9 && std::abs(d.box.h() - g.box.h()) <= 1e-9;
      });
      unmatched += !hit;
    }
    gts.insert(gts.end(), s.body_gts.begin(), s.body_gts.end());
    all.insert(all.end(), out.begin(), out.end());
  }
  const auto ap = ffm::eval::evaluate_run(all, gts, 0.5).mean_ap;
  const bool ok = n_out == n_gt && unmatched == 0 && ap == 1.0;
  return {ok, fmt::format("{} GT, {} FFM boxes, {} unmatched, mean AP {}", n_gt, n_out, unmatched, ap.value_or(-1))};
}

Outcome gradient_check() {
  ffm::Rng rng(6);
  double worst = 0.0;
  int pairs = 0;
  while (pairs < 1000) {
    const BBox g(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(1, 6), rng.uniform(1, 6));
    const BBox p(g.cx() + rng.uniform(-2, 2), g.cy() + rng.uniform(-2, 2), g.w() * rng.uniform(0.5, 1.5),
                 g.h() * rng.uniform(0.5, 1.5));
    const double gaps[] = {p.x1() - g.x1(), p.x2() - g.x2(), p.x1() - g.x2(), p.x2() - g.x1(),
                           p.y1() - g.y1(), p.y2() - g.y2(), p.y1() - g.y2(), p.y2() - g.y1()};
    if (ffm::iou(p, g) <= 0.05 ||
        std::any_of(std::begin(gaps), std::end(gaps), [](double v) { return std::abs(v) <= 1e-3; }))
      continue;
    ++pairs;
    const BBox enc = ffm::enclosing_box(p, g);
    const double d2 = enc.w() * enc.w() + enc.h() * enc.h();
    const auto fd = oracle::central_diff(
        [&](const std::array<double, 4> &x) {
          const BBox q(x[0], x[1], x[2], x[3]);
          const double dx = x[0] - g.cx(), dy = x[1] - g.cy();
          return std::exp((dx * dx + dy * dy) / d2) * (1.0 - ffm::iou(q, g));
        },
        {p.cx(), p.cy(), p.w(), p.h()}, 1e-5);
    const auto an = ffm::loss::loss_gradient({p, g});
    double scale = 1e-8, diff = 0.0;
    for (int i = 0; i < 4; ++i) {
      scale = std::max(scale, std::abs(fd[i]));
      diff = std::max(diff, std::abs(an[i] - fd[i]));
    }
    worst = std::max(worst, diff / scale);
  }
  return {worst <= 1e-4, fmt::format("1000 pairs, max relative error {:.3g}", worst)};
}

Outcome evaluator_oracle() {
  using ffm::eval::Label;
  ffm::Rng rng(7);
  std::size_t mismatches = 0;
  for (int t = 0; t < 500; ++t) {
    const auto n = static_cast<std::size_t>(rng.uniform(0, 21));
    std::vector<ffm::eval::ScoredLabel> v;
    std::vector<oracle::Scored> o;
    std::size_t tps = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = t % 3 == 0 ? std::floor(rng.uniform(1, 6)) / 5.0 : rng.uniform(0.01, 1.0);
      const bool tp = rng.bernoulli(0.5);
      tps += tp;
      v.push_back({s, tp ? Label::tp : Label::fp});
      o.push_back({s, tp});
    }
    const std::size_t n_gt = tps + static_cast<std::size_t>(rng.uniform(0, 4)) + (tps == 0);
    mismatches += ffm::eval::average_precision(v, n_gt) != oracle::brute_force_ap(o, n_gt);
  }
  const double fixture = ffm::eval::average_precision({{0.9, Label::fp}, {0.8, Label::tp}}, 1);
  return {mismatches == 0 && fixture == 0.5,
          fmt::format("500 instances, {} mismatches; FP-then-TP fixture AP {}", mismatches, fixture)};
}

Outcome lr_schedule() {
  const ffm::lr::ScheduleConfig cfg;
  const auto rows = ffm::lr::emit_schedule(cfg);
  bool shape = rows.size() == 50;
  for (std::size_t e = 1; shape && e < rows.size(); ++e)
    shape = e <= cfg.warmup_epochs ? rows[e].second > rows[e - 1].second : rows[e].second < rows[e - 1].second;
  const bool ok = rows[3].second == 0.01 && rows.back().second == cfg.lr_final() && shape;
  return {ok, fmt::format("epoch 3 = {}, epoch 49 = {} (lr_f {}), shape {}", rows[3].second, rows.back().second,
                          cfg.lr_final(), shape ? "ok" : "broken")};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every subcommand twice into separate directories; outputs must match each
// other byte for byte, and the simulate/ffm/eval outputs must match the
// committed golden files (so a CI run on another platform checks
// cross-platform identity).
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ffm_acceptance_determinism";
  fs::remove_all(root);
  const fs::path golden = kSource / "tests" / "golden";
  std::vector<std::string> outputs[2];
  std::size_t failures = 0;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / std::to_string(run);
    fs::create_directories(dir);
    auto call = [&](std::vector<std::string> args) {
      std::ostringstream out, err;
      failures += ffm::cli::run(args, out, err) != 0;
      // Summary lines name the output paths, which differ between runs.
      std::string text = out.str();
      for (auto pos = text.find(dir.string()); pos != std::string::npos; pos = text.find(dir.string()))
        text.replace(pos, dir.string().size(), "<dir>");
      outputs[run].push_back(text);
    };
    call({"simulate", "--config", (golden / "scene.json").string(), "--out", (dir / "sim").string()});
    call({"ffm", "--dets", (dir / "sim" / "part_dets.jsonl").string(), "--out", (dir / "ffm.jsonl").string()});
    call({"eval", "--dets", "ffm=" + (dir / "ffm.jsonl").string(), "--dets",
          "body=" + (dir / "sim" / "body_dets.jsonl").string(), "--gt", (dir / "sim" / "gt.jsonl").string(),
          "--report", (dir / "eval.json").string()});
    call({"flops", "--model", (kSource / "models" / "yolov5s-baseline.json").string(), "--compare",
          (kSource / "models" / "yolov5s-ghost-neck.json").string(), "--json", (dir / "flops.json").string()});
    call({"lr"});
    call({"loss", "--pred", "0.3,0.1,2.2,1.7", "--gt", "0,0,2,2", "--grad"});
    for (const char *f : {"sim/gt.jsonl", "sim/part_dets.jsonl", "sim/body_dets.jsonl", "sim/manifest.json",
                          "ffm.jsonl", "flops.json"})
      outputs[run].push_back(slurp(dir / f));
    std::string report = slurp(dir / "eval.json");
    // The report records the GT path, which differs between the two runs.
    const auto gt_path = (dir / "sim" / "gt.jsonl").string();
    for (auto pos = report.find(gt_path); pos != std::string::npos; pos = report.find(gt_path))
      report.replace(pos, gt_path.size(), "<gt>");
    outputs[run].push_back(report);
  }
  const bool same = outputs[0] == outputs[1];
  std::size_t golden_diff = 0;
  const fs::path dir = root / "0";
  for (const char *f : {"gt.jsonl", "part_dets.jsonl", "body_dets.jsonl", "manifest.json"})
    golden_diff += slurp(dir / "sim" / f) != slurp(golden / f);
  golden_diff += slurp(dir / "ffm.jsonl") != slurp(golden / "ffm.jsonl");
  golden_diff += outputs[0][2] != slurp(golden / "eval.txt");
  fs::remove_all(root);
  return {failures == 0 && same && golden_diff == 0,
          fmt::format("{} outputs x 2 runs {}, {} files differ from golden, {} failed invocations",
                      outputs[0].size(), same ? "identical" : "DIFFER", golden_diff, failures)};
}

} // namespace

int main() {
  const std::pair<const char *, std::function<Outcome()>> criteria[] = {
      {"restore/derive round trip", round_trip},
      {"ghost speedup and MAC counts", ghost_formulas},
      {"model cost deltas", table_deltas},
      {"occlusion robustness", occlusion_robustness},
      {"noise-free recovery", noise_free},
      {"WIoU gradient check", gradient_check},
      {"AP oracle equivalence", evaluator_oracle},
      {"learning-rate schedule", lr_schedule},
      {"CLI determinism", determinism},
  };
  const double limits[] = {1, 30, 5, 60, 10, 10, 10, 1, 60};
  int failed = 0;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < limits[i];
    failed += !pass;
    fmt::print("criterion {}: {} {} - {} [{:.3f}s, limit {}s]\n", i + 1, pass ? "PASS" : "FAIL", criteria[i].first,
               o.detail, secs, limits[i]);
  }
  return failed == 0 ? 0 : 1;
}
