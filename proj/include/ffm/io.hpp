// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/core.h>
#include <json.hpp>

#include "ffm/complexity.hpp"
#include "ffm/detection.hpp"
#include "ffm/error.hpp"
#include "ffm/evaluator.hpp"
#include "ffm/pipeline.hpp"
#include "ffm/simulator.hpp"

/**
 * File formats.
 *
 * Detection and ground-truth records are JSON Lines, one object per line.
 * Canonical form: known keys in fixed order, reals with six decimals, then
 * any unrecognised keys sorted by name. Parsing then re-serialising a
 * canonical line reproduces it byte for byte.
 */
namespace ffm::io {

using json = nlohmann::json;

/// Six-decimal fixed notation; never prints a negative zero.
inline std::string format_real(double v) {
  std::string s = fmt::format("{:.6f}", v);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-')
    s.erase(0, 1);
  return s;
}

// --------------------------------------------------------------------------
// JSONL records

namespace detail {

inline const json &require(const json &obj, const char *key, const std::string &where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw error(where + ": missing field '" + key + "'");
  return *it;
}

inline double require_number(const json &obj, const char *key, const std::string &where) {
  const json &v = require(obj, key, where);
  if (!v.is_number())
    throw error(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline std::string require_string(const json &obj, const char *key, const std::string &where) {
  const json &v = require(obj, key, where);
  if (!v.is_string())
    throw error(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::string extras_of(const json &obj, std::initializer_list<const char *> known) {
  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool is_known = false;
    for (const char *k : known)
      is_known = is_known || it.key() == k;
    if (!is_known)
      extra[it.key()] = it.value();
  }
  return extra.empty() ? std::string{} : extra.dump();
}

inline void append_extras(std::string &line, const std::string &extra) {
  if (extra.empty())
    return;
  const json obj = json::parse(extra);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    line += "," + json(it.key()).dump() + ":" + it.value().dump();
}

inline std::string box_fields(const BBox &b) {
  return "\"cx\":" + format_real(b.cx()) + ",\"cy\":" + format_real(b.cy()) +
         ",\"w\":" + format_real(b.w()) + ",\"h\":" + format_real(b.h());
}

inline json parse_line(const std::string &line, const std::string &where) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error &e) {
    throw error(where + ": invalid JSON (" + e.what() + ")");
  }
  if (!obj.is_object())
    throw error(where + ": record must be a JSON object");
  return obj;
}

template <class F> void for_each_line(std::istream &in, const std::string &source, F &&fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    fn(line, source + ":" + std::to_string(n));
  }
}

} // namespace detail

inline Detection detection_from_json(const json &obj, const std::string &where = "record") {
  try {
    BBox box(detail::require_number(obj, "cx", where), detail::require_number(obj, "cy", where),
             detail::require_number(obj, "w", where), detail::require_number(obj, "h", where));
    return Detection(detail::require_string(obj, "image_id", where),
                     detail::require_string(obj, "class", where), box,
                     detail::require_number(obj, "conf", where),
                     detail::extras_of(obj, {"image_id", "class", "cx", "cy", "w", "h", "conf"}));
  } catch (const invalid_box_error &e) {
    throw error(where + ": " + e.what());
  } catch (const error &e) {
    const std::string msg = e.what();
    if (msg.rfind(where, 0) == 0)
      throw;
    throw error(where + ": " + msg);
  }
}

inline GroundTruth ground_truth_from_json(const json &obj, const std::string &where = "record") {
  bool ignore = false;
  if (auto it = obj.find("ignore"); it != obj.end()) {
    if (!it->is_boolean())
      throw error(where + ": field 'ignore' must be a boolean");
    ignore = it->get<bool>();
  }
  try {
    BBox box(detail::require_number(obj, "cx", where), detail::require_number(obj, "cy", where),
             detail::require_number(obj, "w", where), detail::require_number(obj, "h", where));
    return {detail::require_string(obj, "image_id", where),
            detail::require_string(obj, "class", where), box, ignore};
  } catch (const invalid_box_error &e) {
    throw error(where + ": " + e.what());
  }
}

inline std::string to_jsonl(const Detection &d) {
  std::string line = "{\"image_id\":" + json(d.image_id).dump() +
                     ",\"class\":" + json(d.class_name).dump() + "," + detail::box_fields(d.box) +
                     ",\"conf\":" + format_real(d.conf);
  detail::append_extras(line, d.extra);
  return line + "}";
}

inline std::string to_jsonl(const GroundTruth &g) {
  return "{\"image_id\":" + json(g.image_id).dump() + ",\"class\":" + json(g.class_name).dump() +
         "," + detail::box_fields(g.box) + ",\"ignore\":" + (g.ignore ? "true" : "false") + "}";
}

inline std::vector<Detection> read_detections(std::istream &in,
                                              const std::string &source = "<stream>") {
  std::vector<Detection> out;
  detail::for_each_line(in, source, [&](const std::string &line, const std::string &where) {
    out.push_back(detection_from_json(detail::parse_line(line, where), where));
  });
  return out;
}

inline std::vector<GroundTruth> read_ground_truth(std::istream &in,
                                                  const std::string &source = "<stream>") {
  std::vector<GroundTruth> out;
  detail::for_each_line(in, source, [&](const std::string &line, const std::string &where) {
    out.push_back(ground_truth_from_json(detail::parse_line(line, where), where));
  });
  return out;
}

inline std::ifstream open_input(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw error("cannot open '" + path + "' for reading");
  return in;
}

inline std::vector<Detection> read_detections_file(const std::string &path) {
  auto in = open_input(path);
  return read_detections(in, path);
}

inline std::vector<GroundTruth> read_ground_truth_file(const std::string &path) {
  auto in = open_input(path);
  return read_ground_truth(in, path);
}

/// Canonical record order: image id ascending, then confidence descending.
inline void sort_canonical(std::vector<Detection> &dets) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection &a, const Detection &b) {
    if (a.image_id != b.image_id)
      return a.image_id < b.image_id;
    return ranks_before(a, b);
  });
}

template <class Record> void write_jsonl(std::ostream &out, const std::vector<Record> &records) {
  for (const auto &r : records)
    out << to_jsonl(r) << '\n';
}

// --------------------------------------------------------------------------
// Schema-checked configuration objects

/**
 * @brief Typed access to one JSON object with key-path error messages.
 *
 * Every field read is recorded; finish() rejects any key that was never
 * read, so misspelt keys do not silently fall back to defaults.
 */
class ConfigObject {
public:
  ConfigObject(const json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object())
      throw config_error(path_.empty() ? "<root>" : path_, "must be a JSON object");
  }

  std::string key_path(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string &key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  double number(const std::string &key, double fallback) {
    if (!has(key))
      return fallback;
    const json &v = obj_.at(key);
    if (!v.is_number())
      throw config_error(key_path(key), "must be a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string &key, std::uint64_t fallback) {
    if (!has(key))
      return fallback;
    const json &v = obj_.at(key);
    if (v.is_number_unsigned())
      return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw config_error(key_path(key), "must be a non-negative integer");
  }

  bool boolean(const std::string &key, bool fallback) {
    if (!has(key))
      return fallback;
    const json &v = obj_.at(key);
    if (!v.is_boolean())
      throw config_error(key_path(key), "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string &key, const std::string &fallback) {
    if (!has(key))
      return fallback;
    const json &v = obj_.at(key);
    if (!v.is_string())
      throw config_error(key_path(key), "must be a string");
    return v.get<std::string>();
  }

  const json *child(const std::string &key) {
    if (!has(key))
      return nullptr;
    return &obj_.at(key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.contains(it.key()))
        throw config_error(key_path(it.key()), "unknown key");
  }

private:
  const json &obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json parse_json_file(const std::string &path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw config_error(path, std::string("invalid JSON (") + e.what() + ")");
  }
}

// --------------------------------------------------------------------------
// Run configuration (restore rules, fusion, nms, eval)

inline std::string_view to_string(TieBreak t) {
  switch (t) {
  case TieBreak::prefer_head: return "prefer-head";
  case TieBreak::prefer_leg: return "prefer-leg";
  case TieBreak::prefer_higher_conf: return "prefer-higher-conf";
  }
  return "?";
}

struct EvalConfig {
  double iou_thr = 0.5;
  eval::ApMode ap_mode = eval::ApMode::all_point;
};

struct RunConfig {
  std::vector<RestoreRule> restore_rules = default_rules();
  FusionConfig fusion;
  NmsParams nms;
  EvalConfig eval;
};

namespace detail {

inline double unit_interval(ConfigObject &o, const std::string &key, double fallback) {
  const double v = o.number(key, fallback);
  if (!(v >= 0.0 && v <= 1.0))
    throw config_error(o.key_path(key), "must lie in [0, 1]");
  return v;
}

inline void read_range(ConfigObject &o, const std::string &key, double &lo, double &hi) {
  const json *r = o.child(key);
  if (!r)
    return;
  if (!r->is_array() || r->size() != 2 || !(*r)[0].is_number() || !(*r)[1].is_number())
    throw config_error(o.key_path(key), "must be a [min, max] pair of numbers");
  lo = (*r)[0].get<double>();
  hi = (*r)[1].get<double>();
}

} // namespace detail

inline RunConfig run_config_from_json(const json &root) {
  RunConfig cfg;
  ConfigObject top(root, "");

  if (const json *rules = top.child("restore_rules")) {
    if (!rules->is_array())
      throw config_error("restore_rules", "must be an array");
    cfg.restore_rules.clear();
    std::set<std::string> names;
    for (std::size_t i = 0; i < rules->size(); ++i) {
      const std::string path = "restore_rules[" + std::to_string(i) + "]";
      ConfigObject r((*rules)[i], path);
      RestoreRule rule;
      rule.part_class = r.string("part_class", "");
      if (rule.part_class.empty())
        throw config_error(r.key_path("part_class"), "is required");
      if (!names.insert(rule.part_class).second)
        throw config_error(r.key_path("part_class"), "duplicate class '" + rule.part_class + "'");
      rule.dy_factor = r.number("dy_factor", 0.0);
      rule.dx_factor = r.number("dx_factor", 0.0);
      rule.w_factor = r.number("w_factor", 1.0);
      rule.h_factor = r.number("h_factor", 1.0);
      if (!(rule.w_factor > 0.0))
        throw config_error(r.key_path("w_factor"), "must be positive");
      if (!(rule.h_factor > 0.0))
        throw config_error(r.key_path("h_factor"), "must be positive");
      r.finish();
      cfg.restore_rules.push_back(rule);
    }
  }
  if (const json *f = top.child("fusion")) {
    ConfigObject o(*f, "fusion");
    cfg.fusion.iou_threshold = detail::unit_interval(o, "iou_threshold", 0.5);
    const std::string tb = o.string("tie_break", "prefer-head");
    if (tb == "prefer-head")
      cfg.fusion.tie_break = TieBreak::prefer_head;
    else if (tb == "prefer-leg")
      cfg.fusion.tie_break = TieBreak::prefer_leg;
    else if (tb == "prefer-higher-conf")
      cfg.fusion.tie_break = TieBreak::prefer_higher_conf;
    else
      throw config_error("fusion.tie_break",
                         "must be prefer-head, prefer-leg or prefer-higher-conf");
    cfg.fusion.strict_classes = o.boolean("strict_classes", false);
    o.finish();
  }
  if (const json *n = top.child("nms")) {
    ConfigObject o(*n, "nms");
    cfg.nms.conf_thr = detail::unit_interval(o, "conf_thr", 0.25);
    cfg.nms.iou_thr = detail::unit_interval(o, "iou_thr", 0.45);
    o.finish();
  }
  if (const json *e = top.child("eval")) {
    ConfigObject o(*e, "eval");
    cfg.eval.iou_thr = detail::unit_interval(o, "iou_thr", 0.5);
    const std::string mode = o.string("ap_mode", "all-point");
    if (mode == "all-point")
      cfg.eval.ap_mode = eval::ApMode::all_point;
    else if (mode == "11-point")
      cfg.eval.ap_mode = eval::ApMode::eleven_point;
    else
      throw config_error("eval.ap_mode", "must be all-point or 11-point");
    o.finish();
  }
  top.finish();
  return cfg;
}

// --------------------------------------------------------------------------
// Simulation configuration

struct SimulationConfig {
  sim::SceneConfig scene;
  std::size_t n_scenes = 1;
  std::string sequence = "sim";
};

inline SimulationConfig simulation_config_from_json(const json &root) {
  SimulationConfig out;
  sim::SceneConfig &s = out.scene;
  ConfigObject o(root, "");
  s.img_w = o.number("img_w", s.img_w);
  s.img_h = o.number("img_h", s.img_h);
  s.n_pedestrians = o.count("n_pedestrians", s.n_pedestrians);
  detail::read_range(o, "height_range", s.height_min, s.height_max);
  s.body_aspect = o.number("body_aspect", s.body_aspect);
  s.occlusion_rate = o.number("occlusion_rate", s.occlusion_rate);
  s.visibility_threshold = o.number("visibility_threshold", s.visibility_threshold);
  s.noise_eta = o.number("noise_eta", s.noise_eta);
  s.conf_base = o.number("conf_base", s.conf_base);
  s.conf_penalty = o.number("conf_penalty", s.conf_penalty);
  s.conf_noise = o.number("conf_noise", s.conf_noise);
  s.occluder_bias = o.boolean("occluder_bias", s.occluder_bias);
  s.occluder_lower_fraction = o.number("occluder_lower_fraction", s.occluder_lower_fraction);
  detail::read_range(o, "occluder_width_range", s.occluder_w_min, s.occluder_w_max);
  detail::read_range(o, "occluder_height_range", s.occluder_h_min, s.occluder_h_max);
  s.max_overlap_iou = o.number("max_overlap_iou", s.max_overlap_iou);
  s.max_retries = o.count("max_retries", s.max_retries);
  s.seed = o.count("seed", s.seed);
  out.n_scenes = o.count("n_scenes", out.n_scenes);
  out.sequence = o.string("sequence", out.sequence);
  o.finish();
  if (out.sequence.empty() || out.sequence.find('/') != std::string::npos)
    throw config_error("sequence", "must be non-empty and contain no '/'");
  s.validate();
  return out;
}

inline json to_json(const sim::SceneConfig &s) {
  return json{{"img_w", s.img_w},
              {"img_h", s.img_h},
              {"n_pedestrians", s.n_pedestrians},
              {"height_range", {s.height_min, s.height_max}},
              {"body_aspect", s.body_aspect},
              {"occlusion_rate", s.occlusion_rate},
              {"visibility_threshold", s.visibility_threshold},
              {"noise_eta", s.noise_eta},
              {"conf_base", s.conf_base},
              {"conf_penalty", s.conf_penalty},
              {"conf_noise", s.conf_noise},
              {"occluder_bias", s.occluder_bias},
              {"occluder_lower_fraction", s.occluder_lower_fraction},
              {"occluder_width_range", {s.occluder_w_min, s.occluder_w_max}},
              {"occluder_height_range", {s.occluder_h_min, s.occluder_h_max}},
              {"max_overlap_iou", s.max_overlap_iou},
              {"max_retries", s.max_retries},
              {"seed", s.seed}};
}

inline json box_json(const BBox &b) {
  return json{{"cx", b.cx()}, {"cy", b.cy()}, {"w", b.w()}, {"h", b.h()}};
}

/// Scene manifest: generator settings plus every pedestrian's boxes and
/// visibilities, and the occluders.
inline json manifest_json(const SimulationConfig &cfg, const std::vector<sim::Scene> &scenes) {
  json out;
  out["generator"] = "ffm-occlusion-simulator";
  out["rng"] = "mt19937_64; uniform = top 53 bits; normal = Box-Muller (cosine branch)";
  out["config"] = to_json(cfg.scene);
  out["n_scenes"] = cfg.n_scenes;
  out["sequence"] = cfg.sequence;
  json list = json::array();
  std::size_t n_ped = 0, n_part = 0, n_body = 0;
  for (const auto &sc : scenes) {
    json js;
    js["image_id"] = sc.config.image_id;
    js["seed"] = sc.config.seed;
    json peds = json::array();
    for (std::size_t i = 0; i < sc.pedestrians.size(); ++i) {
      const auto &p = sc.pedestrians[i];
      peds.push_back({{"id", p.id},
                      {"body", box_json(p.body)},
                      {"head", box_json(sc.part_gts[2 * i].box)},
                      {"leg", box_json(sc.part_gts[2 * i + 1].box)},
                      {"visibility",
                       {{"head", sc.visibility[i].head},
                        {"leg", sc.visibility[i].leg},
                        {"body", sc.visibility[i].body}}}});
    }
    js["pedestrians"] = peds;
    json occ = json::array();
    for (const auto &o : sc.occluders)
      occ.push_back(box_json(o.box));
    js["occluders"] = occ;
    list.push_back(js);
    n_ped += sc.pedestrians.size();
    n_part += sc.part_dets.size();
    n_body += sc.body_dets.size();
  }
  out["scenes"] = list;
  out["counts"] = {{"pedestrians", n_ped}, {"part_detections", n_part}, {"body_detections", n_body}};
  return out;
}

// --------------------------------------------------------------------------
// Model specs and cost reports

inline cost::ModelSpec model_spec_from_json(const json &root) {
  cost::ModelSpec m;
  ConfigObject o(root, "");
  m.name = o.string("name", "model");
  m.input_h = o.count("input_h", 0);
  m.input_w = o.count("input_w", 0);
  m.input_c = o.count("input_c", 3);
  if (m.input_h == 0)
    throw config_error("input_h", "is required and must be positive");
  if (m.input_w == 0)
    throw config_error("input_w", "is required and must be positive");
  const json *layers = o.child("layers");
  if (!layers || !layers->is_array())
    throw config_error("layers", "must be an array");
  for (std::size_t i = 0; i < layers->size(); ++i) {
    const std::string path = "layers[" + std::to_string(i) + "]";
    ConfigObject l((*layers)[i], path);
    cost::LayerSpec spec;
    const std::string kind = l.string("kind", "");
    auto k = cost::parse_layer_kind(kind);
    if (!k)
      throw config_error(l.key_path("kind"), "unknown layer kind '" + kind + "'");
    spec.kind = *k;
    spec.name = l.string("name", "");
    if (const json *f = l.child("from")) {
      spec.from.clear();
      auto push = [&](const json &v) {
        if (!v.is_number_integer())
          throw config_error(l.key_path("from"), "must be an integer or a list of integers");
        spec.from.push_back(v.get<int>());
      };
      if (f->is_array())
        for (const auto &v : *f)
          push(v);
      else
        push(*f);
    }
    spec.c1 = l.count("c1", 0);
    spec.c2 = l.count("c2", 0);
    spec.n = l.count("n", 1);
    spec.stride = l.count("stride", 1);
    if (l.has("pad"))
      spec.pad = l.count("pad", 0);
    spec.in_h = l.count("in_h", 0);
    spec.in_w = l.count("in_w", 0);
    spec.s = l.count("s", 2);
    spec.l = l.count("l", 3);
    spec.r = l.count("r", 16);
    spec.fixed_params = l.count("fixed_params", 0);
    spec.fixed_flops = l.count("fixed_flops", 0);
    spec.scale = l.count("scale", 2);
    spec.bn = l.boolean("bn", spec.kind == cost::LayerKind::conv ||
                                  spec.kind == cost::LayerKind::ghost_conv);
    spec.bias = l.boolean("bias", spec.kind == cost::LayerKind::se ||
                                      spec.kind == cost::LayerKind::fc);
    l.finish();
    m.layers.push_back(std::move(spec));
  }
  o.finish();
  return m;
}

inline std::string_view to_string(cost::NormAccounting a) {
  return a == cost::NormAccounting::affine ? "bn-affine" : "bn-fused";
}

inline std::string accounting_note(cost::NormAccounting a, bool flops_x2) {
  return fmt::format(
      "params: weights + {} per normalised channel (convs bias-free); flops: {}",
      a == cost::NormAccounting::affine ? "2 (batch-norm scale and shift)"
                                        : "1 (batch norm folded into a bias)",
      flops_x2 ? "2 x multiply-accumulates" : "multiply-accumulates");
}

inline json report_json(const cost::ModelReport &rep, bool flops_x2) {
  const std::uint64_t mul = flops_x2 ? 2 : 1;
  json layers = json::array();
  for (const auto &l : rep.layers)
    layers.push_back({{"index", l.index},
                      {"name", l.name},
                      {"kind", std::string(cost::to_string(l.kind))},
                      {"out", {l.out.h, l.out.w, l.out.c}},
                      {"params", l.params},
                      {"flops", l.flops * mul}});
  return json{{"name", rep.name},
              {"convention", accounting_note(rep.accounting, flops_x2)},
              {"accounting", std::string(to_string(rep.accounting))},
              {"flops_unit", flops_x2 ? "FLOP" : "MAC"},
              {"total_params", rep.total_params},
              {"total_flops", rep.total_flops * mul},
              {"layers", layers}};
}

inline json delta_json(const cost::ModelDelta &d, bool flops_x2) {
  const std::int64_t mul = flops_x2 ? 2 : 1;
  return json{{"base", d.base},
              {"variant", d.variant},
              {"param_change", d.param_change},
              {"flops_change", d.flops_change * mul},
              {"param_reduction", d.param_reduction},
              {"flops_reduction", d.flops_reduction}};
}

inline std::string report_table(const cost::ModelReport &rep, bool flops_x2) {
  const std::uint64_t mul = flops_x2 ? 2 : 1;
  std::string out = fmt::format("# model: {}\n# {}\n", rep.name,
                                accounting_note(rep.accounting, flops_x2));
  out += fmt::format("{:>5}  {:<28} {:<12} {:>16} {:>12} {:>16}\n", "idx", "name", "kind",
                     "out (h,w,c)", "params", flops_x2 ? "flops" : "macs");
  for (const auto &l : rep.layers)
    out += fmt::format("{:>5}  {:<28} {:<12} {:>16} {:>12} {:>16}\n", l.index, l.name,
                       cost::to_string(l.kind), fmt::format("{}x{}x{}", l.out.h, l.out.w, l.out.c),
                       l.params, l.flops * mul);
  out += fmt::format("total params {}  total {} {}  (G{} {:.2f})\n", rep.total_params,
                     flops_x2 ? "flops" : "macs", rep.total_flops * mul,
                     flops_x2 ? "FLOPs" : "MACs", static_cast<double>(rep.total_flops * mul) / 1e9);
  return out;
}

// --------------------------------------------------------------------------
// Evaluation reports

inline json class_results_json(const std::vector<eval::ClassResult> &classes) {
  json arr = json::array();
  for (const auto &c : classes)
    arr.push_back({{"class", c.class_name},
                   {"ap", c.ap ? json(*c.ap) : json(nullptr)},
                   {"n_gt", c.n_gt},
                   {"n_det", c.n_det},
                   {"tp", c.tp},
                   {"fp", c.fp}});
  return arr;
}

inline json eval_report_json(const std::string &run, const eval::EvalReport &rep) {
  json groups = json::array();
  for (const auto &g : rep.groups)
    groups.push_back({{"group", g.group},
                      {"mean_ap", g.mean_ap ? json(*g.mean_ap) : json(nullptr)},
                      {"classes", class_results_json(g.classes)}});
  return json{{"name", run},
              {"mean_ap", rep.mean_ap ? json(*rep.mean_ap) : json(nullptr)},
              {"classes", class_results_json(rep.classes)},
              {"groups", groups}};
}

inline std::string eval_convention(double iou_thr, eval::ApMode mode) {
  return fmt::format("{} interpolated AP, detection matches ground truth at IoU >= {}",
                     eval::to_string(mode), iou_thr);
}

} // namespace ffm::io
