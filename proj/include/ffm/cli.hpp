// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "ffm/complexity.hpp"
#include "ffm/error.hpp"
#include "ffm/evaluator.hpp"
#include "ffm/io.hpp"
#include "ffm/losses.hpp"
#include "ffm/lr_schedule.hpp"
#include "ffm/micro_nn.hpp"
#include "ffm/pipeline.hpp"
#include "ffm/random.hpp"
#include "ffm/simulator.hpp"

namespace ffm::cli {

enum ExitCode : int { ok = 0, runtime_failure = 1, config_failure = 2 };

namespace detail {

inline void write_text(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out)
    throw error("write to '" + path.string() + "' failed");
}

template <class Record> std::string jsonl_text(const std::vector<Record> &records) {
  std::ostringstream ss;
  io::write_jsonl(ss, records);
  return ss.str();
}

inline BBox parse_box_arg(const std::string &text, const std::string &key) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (part.find_first_not_of(" \t", used) != std::string::npos)
        throw std::invalid_argument(part);
    } catch (const std::logic_error &) {
      throw config_error(key, "'" + part + "' is not a number");
    }
  }
  if (v.size() != 4)
    throw config_error(key, "expected cx,cy,w,h");
  try {
    return BBox(v[0], v[1], v[2], v[3]);
  } catch (const invalid_box_error &e) {
    throw config_error(key, e.what());
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::string out;
};

inline int simulate(const SimulateArgs &a, std::ostream &out) {
  const auto cfg = io::simulation_config_from_json(io::parse_json_file(a.config));
  const auto scenes = sim::generate_many(cfg.scene, cfg.n_scenes, cfg.sequence);
  std::vector<GroundTruth> gts;
  std::vector<Detection> parts, bodies;
  for (const auto &s : scenes) {
    gts.insert(gts.end(), s.body_gts.begin(), s.body_gts.end());
    parts.insert(parts.end(), s.part_dets.begin(), s.part_dets.end());
    bodies.insert(bodies.end(), s.body_dets.begin(), s.body_dets.end());
  }
  io::sort_canonical(parts);
  io::sort_canonical(bodies);
  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir);
  write_text(dir / "gt.jsonl", jsonl_text(gts));
  write_text(dir / "part_dets.jsonl", jsonl_text(parts));
  write_text(dir / "body_dets.jsonl", jsonl_text(bodies));
  write_text(dir / "manifest.json", io::manifest_json(cfg, scenes).dump(2) + "\n");
  out << fmt::format("{} scenes, {} pedestrians, {} part detections, {} body detections -> {}\n",
                     scenes.size(), gts.size(), parts.size(), bodies.size(), dir.string());
  return ok;
}

// --------------------------------------------------------------------- ffm

struct FfmArgs {
  std::string dets;
  std::string config;
  std::string out;
};

inline io::RunConfig load_run_config(const std::string &path) {
  return path.empty() ? io::RunConfig{} : io::run_config_from_json(io::parse_json_file(path));
}

inline int ffm(const FfmArgs &a, std::ostream &out) {
  const auto cfg = load_run_config(a.config);
  const auto dets = io::read_detections_file(a.dets);
  auto fused = run_ffm(dets, cfg.restore_rules, cfg.fusion, cfg.nms);
  io::sort_canonical(fused);
  write_text(a.out, jsonl_text(fused));
  out << fmt::format("{} detections in, {} out -> {}\n", dets.size(), fused.size(), a.out);
  return ok;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> dets;
  std::string gt;
  std::string config;
  std::optional<double> iou;
  std::optional<std::string> ap_mode;
  std::string report;
};

inline std::pair<std::string, std::string> split_run(const std::string &arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos && eq > 0)
    return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {std::filesystem::path(arg).stem().string(), arg};
}

inline std::string percent(const std::optional<double> &ap) {
  return ap ? fmt::format("{:.2f}", 100.0 * *ap) : std::string("-");
}

inline int evaluate(const EvalArgs &a, std::ostream &out) {
  auto cfg = load_run_config(a.config).eval;
  if (a.iou) {
    if (!(*a.iou >= 0.0 && *a.iou <= 1.0))
      throw config_error("iou", "must lie in [0, 1]");
    cfg.iou_thr = *a.iou;
  }
  if (a.ap_mode) {
    if (*a.ap_mode == "all-point")
      cfg.ap_mode = eval::ApMode::all_point;
    else if (*a.ap_mode == "11-point")
      cfg.ap_mode = eval::ApMode::eleven_point;
    else
      throw config_error("ap-mode", "must be all-point or 11-point");
  }
  const auto gts = io::read_ground_truth_file(a.gt);

  std::vector<std::pair<std::string, eval::EvalReport>> runs;
  std::set<std::string> names;
  for (const auto &arg : a.dets) {
    auto [name, path] = split_run(arg);
    if (!names.insert(name).second)
      throw config_error("dets", "duplicate run name '" + name + "'");
    runs.emplace_back(name, eval::evaluate_run(io::read_detections_file(path), gts, cfg.iou_thr,
                                               cfg.ap_mode));
  }

  // Rows are image groups (sequences), columns are runs.
  std::vector<std::string> groups;
  for (const auto &[name, rep] : runs)
    for (const auto &g : rep.groups)
      if (std::find(groups.begin(), groups.end(), g.group) == groups.end())
        groups.push_back(g.group);
  std::sort(groups.begin(), groups.end());

  std::string table = fmt::format("# {}\n# AP in percent; mean over classes with ground truth\n",
                                  io::eval_convention(cfg.iou_thr, cfg.ap_mode));
  table += fmt::format("{:<16}", "sequence");
  for (const auto &[name, rep] : runs)
    table += fmt::format(" {:>12}", name);
  table += "\n";
  for (const auto &g : groups) {
    table += fmt::format("{:<16}", g);
    for (const auto &[name, rep] : runs) {
      std::optional<double> v;
      for (const auto &gr : rep.groups)
        if (gr.group == g)
          v = gr.mean_ap;
      table += fmt::format(" {:>12}", percent(v));
    }
    table += "\n";
  }
  table += fmt::format("{:<16}", "all");
  for (const auto &[name, rep] : runs)
    table += fmt::format(" {:>12}", percent(rep.mean_ap));
  table += "\n";
  out << table;

  if (!a.report.empty()) {
    io::json j;
    j["convention"] = io::eval_convention(cfg.iou_thr, cfg.ap_mode);
    j["iou_thr"] = cfg.iou_thr;
    j["ap_mode"] = std::string(eval::to_string(cfg.ap_mode));
    j["gt"] = a.gt;
    j["runs"] = io::json::array();
    for (const auto &[name, rep] : runs)
      j["runs"].push_back(io::eval_report_json(name, rep));
    write_text(a.report, j.dump(2) + "\n");
  }
  return ok;
}

// ------------------------------------------------------------------- flops

struct FlopsArgs {
  std::string model;
  std::string compare;
  std::string json;
  bool verify = false;
  std::size_t verify_cap = 32;
  bool flops_x2 = false;
  bool fused_bn = false;
};

/**
 * @brief Runs one layer through the reference kernels and returns the
 * (analytical, observed) MAC counts.
 *
 * Spatial extents are capped at `cap` (0 = no cap) so large models verify in
 * seconds; the analytical count is taken on the same capped layer.
 */
inline std::pair<std::uint64_t, std::uint64_t> verify_layer(cost::LayerSpec spec, std::size_t cap,
                                                            Rng &rng) {
  if (cap > 0) {
    spec.in_h = std::min(spec.in_h, cap);
    spec.in_w = std::min(spec.in_w, cap);
  }
  auto fill = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto &x : v)
      x = rng.uniform(-1.0, 1.0);
    return v;
  };
  nn::MacCounter counter;
  const std::size_t h = std::max<std::size_t>(spec.in_h, 1);
  const std::size_t w = std::max<std::size_t>(spec.in_w, 1);
  switch (spec.kind) {
  case cost::LayerKind::conv: {
    nn::FeatureMap x(h, w, spec.c1, fill(h * w * spec.c1));
    nn::ConvKernelSet k(spec.c2, spec.c1, spec.n, fill(spec.c2 * spec.c1 * spec.n * spec.n));
    nn::conv2d_direct(x, k, spec.stride, spec.padding(), &counter);
    break;
  }
  case cost::LayerKind::ghost_conv: {
    const std::size_t intrinsic = spec.c2 / spec.s;
    const std::size_t cheap = spec.c2 - intrinsic;
    nn::FeatureMap x(h, w, spec.c1, fill(h * w * spec.c1));
    nn::ConvKernelSet primary(intrinsic, spec.c1, spec.n,
                              fill(intrinsic * spec.c1 * spec.n * spec.n));
    nn::DepthwiseKernelSet dw(std::max<std::size_t>(cheap, 1), spec.l,
                              fill(std::max<std::size_t>(cheap, 1) * spec.l * spec.l));
    nn::ghost_forward(x, spec.c2, primary, dw, spec.s, spec.stride, spec.padding(), &counter);
    break;
  }
  case cost::LayerKind::se: {
    const std::size_t c = spec.c1, hid = spec.c1 / spec.r;
    nn::FeatureMap x(h, w, c, fill(h * w * c));
    nn::SEWeights sw(c, spec.r, fill(hid * c), fill(c * hid), fill(hid), fill(c));
    nn::se_forward(x, sw, &counter);
    break;
  }
  case cost::LayerKind::fc: {
    const std::size_t in = spec.c1 * h * w;
    nn::fc_forward(fill(in), spec.c2, fill(spec.c2 * in), fill(spec.c2), &counter);
    break;
  }
  default: return {0, 0};
  }
  return {cost::layer_flops(spec), counter.macs};
}

inline bool verifiable(cost::LayerKind k) {
  return k == cost::LayerKind::conv || k == cost::LayerKind::ghost_conv ||
         k == cost::LayerKind::se || k == cost::LayerKind::fc;
}

inline int flops(const FlopsArgs &a, std::ostream &out, std::ostream &err) {
  const auto acct = a.fused_bn ? cost::NormAccounting::fused : cost::NormAccounting::affine;
  const auto model = io::model_spec_from_json(io::parse_json_file(a.model));
  const auto rep = cost::summarize(model, acct);
  out << io::report_table(rep, a.flops_x2);

  io::json j = io::report_json(rep, a.flops_x2);
  if (!a.compare.empty()) {
    const auto variant = cost::summarize(io::model_spec_from_json(io::parse_json_file(a.compare)), acct);
    const auto d = cost::compare(rep, variant);
    const std::uint64_t mul = a.flops_x2 ? 2 : 1;
    out << fmt::format("compare {} -> {}: params {} -> {} ({:+.2f}%), {} {} -> {} ({:+.2f}%)\n",
                       d.base, d.variant, rep.total_params, variant.total_params,
                       -100.0 * d.param_reduction, a.flops_x2 ? "flops" : "macs",
                       rep.total_flops * mul, variant.total_flops * mul,
                       -100.0 * d.flops_reduction);
    j["compare"] = io::report_json(variant, a.flops_x2);
    j["delta"] = io::delta_json(d, a.flops_x2);
  }

  int status = ok;
  if (a.verify) {
    using Key = std::tuple<int, std::size_t, std::size_t, std::size_t, std::size_t, std::size_t,
                           std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>;
    std::set<Key> seen;
    std::size_t checked = 0, failed = 0;
    Rng rng(0);
    const auto resolved = cost::resolve(model);
    for (std::size_t i = 0; i < resolved.size(); ++i) {
      const auto &spec = resolved[i].first;
      if (!verifiable(spec.kind))
        continue;
      const Key key{static_cast<int>(spec.kind), spec.c1, spec.c2, spec.n, spec.stride,
                    spec.padding(), spec.in_h, spec.in_w, spec.s, spec.l, spec.r};
      if (!seen.insert(key).second)
        continue;
      const auto [expected, observed] = verify_layer(spec, a.verify_cap, rng);
      ++checked;
      if (expected != observed) {
        ++failed;
        err << fmt::format("verify: layer {} ({}): analytical {} MACs, observed {}\n", i,
                           cost::detail::layer_label(spec), expected, observed);
      }
    }
    out << fmt::format("verify: {} unique layer configs, {} mismatches{}\n", checked, failed,
                       a.verify_cap ? fmt::format(" (spatial cap {})", a.verify_cap) : "");
    j["verify"] = {{"checked", checked}, {"mismatches", failed}, {"spatial_cap", a.verify_cap}};
    if (failed > 0)
      status = runtime_failure;
  }
  if (!a.json.empty())
    write_text(a.json, j.dump(2) + "\n");
  return status;
}

// ---------------------------------------------------------------------- lr

inline int lr(const lr::ScheduleConfig &cfg, std::ostream &out) {
  cfg.validate();
  std::string csv = "epoch,lr\n";
  for (const auto &[e, v] : lr::emit_schedule(cfg))
    csv += fmt::format("{},{}\n", e, v);
  out << csv;
  return ok;
}

// -------------------------------------------------------------------- loss

struct LossArgs {
  std::string pred;
  std::string gt;
  std::string kind = "wiou";
  bool grad = false;
};

inline int loss(const LossArgs &a, std::ostream &out) {
  const loss::BoxPair p{parse_box_arg(a.pred, "pred"), parse_box_arg(a.gt, "gt")};
  const bool wiou = a.kind == "wiou";
  out << fmt::format("{}\n", wiou ? loss::wiou_loss(p) : loss::iou_loss(p));
  if (a.grad) {
    const auto g = wiou ? loss::loss_gradient(p) : loss::iou_loss_gradient(p);
    out << fmt::format("{},{},{},{}\n", g[0] + 0.0, g[1] + 0.0, g[2] + 0.0, g[3] + 0.0);
  }
  return ok;
}

} // namespace detail

/**
 * @brief Entry point of `ffmtool`. Returns the process exit code: 0 on
 * success, 2 on usage or configuration errors, 1 on any other failure.
 */
inline int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Part-based pedestrian detection toolkit: simulate occluded scenes, restore and "
               "fuse part detections, evaluate AP, count model cost."};
  app.name("ffmtool");
  app.require_subcommand(1);

  detail::SimulateArgs sim_args;
  auto *sim_cmd = app.add_subcommand("simulate", "Generate seeded synthetic occlusion scenes");
  sim_cmd->add_option("--config", sim_args.config, "Scene config JSON")->required();
  sim_cmd->add_option("--out", sim_args.out,
                      "Output directory (gt.jsonl, part_dets.jsonl, body_dets.jsonl, manifest.json)")
      ->required();

  detail::FfmArgs ffm_args;
  auto *ffm_cmd = app.add_subcommand("ffm", "Restore part detections to bodies and fuse them");
  ffm_cmd->add_option("--dets", ffm_args.dets, "Part detections JSONL")->required();
  ffm_cmd->add_option("--config", ffm_args.config, "Run config JSON (defaults when omitted)");
  ffm_cmd->add_option("--out", ffm_args.out, "Fused detections JSONL")->required();

  detail::EvalArgs eval_args;
  auto *eval_cmd = app.add_subcommand("eval", "Per-class and per-sequence average precision");
  eval_cmd->add_option("--dets", eval_args.dets, "Detections JSONL as [name=]path; repeatable")
      ->required();
  eval_cmd->add_option("--gt", eval_args.gt, "Ground truth JSONL")->required();
  eval_cmd->add_option("--config", eval_args.config, "Run config JSON supplying eval defaults");
  eval_cmd->add_option("--iou", eval_args.iou, "IoU matching threshold (default 0.5)");
  eval_cmd->add_option("--ap-mode", eval_args.ap_mode, "all-point (default) or 11-point");
  eval_cmd->add_option("--report", eval_args.report, "Write the JSON report here");

  detail::FlopsArgs flops_args;
  auto *flops_cmd = app.add_subcommand("flops", "Parameter and FLOP count of a model spec");
  flops_cmd->add_option("--model", flops_args.model, "Model spec JSON")->required();
  flops_cmd->add_option("--compare", flops_args.compare, "Second model spec; print the delta");
  flops_cmd->add_option("--json", flops_args.json, "Write the JSON report here");
  flops_cmd->add_flag("--verify", flops_args.verify,
                      "Run every unique layer through the reference kernels and compare MACs");
  flops_cmd->add_option("--verify-cap", flops_args.verify_cap,
                        "Spatial size cap for --verify (0 = full size)")
      ->capture_default_str();
  flops_cmd->add_flag("--flops-x2", flops_args.flops_x2, "Report 2 x MACs as FLOPs");
  flops_cmd->add_flag("--fused-bn", flops_args.fused_bn,
                      "Count one parameter per normalised channel (batch norm folded)");

  lr::ScheduleConfig lr_cfg;
  auto *lr_cmd = app.add_subcommand("lr", "Per-epoch learning rate as CSV");
  lr_cmd->add_option("--epochs", lr_cfg.total_epochs, "Total epochs")->capture_default_str();
  lr_cmd->add_option("--warmup", lr_cfg.warmup_epochs, "Warmup epochs")->capture_default_str();
  lr_cmd->add_option("--peak", lr_cfg.lr_peak, "Peak learning rate")->capture_default_str();
  lr_cmd->add_option("--start", lr_cfg.lr_start, "Learning rate at epoch 0")->capture_default_str();
  lr_cmd->add_option("--final-fraction", lr_cfg.lr_final_fraction,
                     "Final rate as a fraction of the peak")
      ->capture_default_str();

  detail::LossArgs loss_args;
  auto *loss_cmd = app.add_subcommand("loss", "Box regression loss (and gradient) for one pair");
  loss_cmd->add_option("--pred", loss_args.pred, "Predicted box cx,cy,w,h")->required();
  loss_cmd->add_option("--gt", loss_args.gt, "Target box cx,cy,w,h")->required();
  loss_cmd->add_option("--kind", loss_args.kind, "iou or wiou")
      ->check(CLI::IsMember({"iou", "wiou"}))
      ->capture_default_str();
  loss_cmd->add_flag("--grad", loss_args.grad,
                     "Also print d/d(cx,cy,w,h) of the loss w.r.t. the prediction");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    // Help requests exit 0; every other parse failure is a usage error.
    return app.exit(e, out, err) == 0 ? ok : config_failure;
  }

  try {
    if (*sim_cmd)
      return detail::simulate(sim_args, out);
    if (*ffm_cmd)
      return detail::ffm(ffm_args, out);
    if (*eval_cmd)
      return detail::evaluate(eval_args, out);
    if (*flops_cmd)
      return detail::flops(flops_args, out, err);
    if (*lr_cmd)
      return detail::lr(lr_cfg, out);
    if (*loss_cmd)
      return detail::loss(loss_args, out);
  } catch (const config_error &e) {
    err << "config error: " << e.what() << "\n";
    return config_failure;
  } catch (const spec_error &e) {
    err << "model spec error: " << e.what() << "\n";
    return config_failure;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return runtime_failure;
  }
  return runtime_failure;
}

} // namespace ffm::cli
