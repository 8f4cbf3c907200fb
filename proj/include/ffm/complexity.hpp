// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ffm/error.hpp"

/**
 * Analytical parameter and FLOPs accounting.
 *
 * FLOPs are multiply-accumulate counts: a k x k convolution producing an
 * h2 x w2 x c2 map from c1 channels costs h2*w2*c2*c1*k*k. Parameters count
 * weights plus normalisation: convs are bias-free and each batch-norm channel
 * contributes its affine pair (2) unless NormAccounting::fused is requested,
 * in which case the norm is folded into a single per-channel bias (1).
 */
namespace ffm::cost {

enum class LayerKind { conv, ghost_conv, se, fc, other_fixed, concat, upsample, add };

inline std::string_view to_string(LayerKind k) {
  switch (k) {
  case LayerKind::conv: return "conv";
  case LayerKind::ghost_conv: return "ghost_conv";
  case LayerKind::se: return "se";
  case LayerKind::fc: return "fc";
  case LayerKind::other_fixed: return "other_fixed";
  case LayerKind::concat: return "concat";
  case LayerKind::upsample: return "upsample";
  case LayerKind::add: return "add";
  }
  return "?";
}

inline std::optional<LayerKind> parse_layer_kind(std::string_view s) {
  for (auto k : {LayerKind::conv, LayerKind::ghost_conv, LayerKind::se, LayerKind::fc,
                 LayerKind::other_fixed, LayerKind::concat, LayerKind::upsample, LayerKind::add})
    if (to_string(k) == s)
      return k;
  if (s == "other-fixed")
    return LayerKind::other_fixed;
  return std::nullopt;
}

enum class NormAccounting { affine, fused };

/**
 * @brief One layer of a declarative model description.
 *
 * c1 / in_h / in_w describe the layer input. Inside a ModelSpec they may be
 * left 0 and are inferred from the layers named in `from`; when given they
 * are checked. `pad` defaults to n/2 (same padding for odd kernels).
 */
struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::string name;
  /// Input layers: negative values are relative (-1 = previous layer),
  /// non-negative values are absolute indices. -1 on layer 0 is the model input.
  std::vector<int> from{-1};
  std::size_t c1 = 0;
  std::size_t c2 = 0;
  std::size_t n = 1;
  std::size_t stride = 1;
  std::optional<std::size_t> pad;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t s = 2;  // ghost ratio
  std::size_t l = 3;  // ghost cheap kernel
  std::size_t r = 16; // SE reduction
  std::uint64_t fixed_params = 0;
  std::uint64_t fixed_flops = 0;
  std::size_t scale = 2; // upsample factor
  bool bn = true;        // conv / ghost_conv followed by batch norm
  bool bias = false;     // conv / ghost_conv / se / fc carry a bias vector

  std::size_t padding() const noexcept { return pad.value_or(n / 2); }
};

struct OutputShape {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;
  friend bool operator==(const OutputShape &, const OutputShape &) = default;
};

namespace detail {

inline std::string layer_label(const LayerSpec &spec) {
  return std::string(to_string(spec.kind)) + (spec.name.empty() ? "" : " '" + spec.name + "'");
}

inline void require_kind(const LayerSpec &spec, LayerKind k) {
  if (spec.kind != k)
    throw spec_error("expected a " + std::string(to_string(k)) + " layer, got " +
                     layer_label(spec));
}

inline void require_positive(std::size_t v, const char *field, const LayerSpec &spec) {
  if (v == 0)
    throw spec_error(layer_label(spec) + ": " + field + " must be positive");
}

inline std::size_t out_dim(std::size_t dim, const LayerSpec &spec) {
  const std::size_t p = spec.padding();
  if (dim + 2 * p < spec.n)
    throw spec_error(layer_label(spec) + ": kernel larger than padded input");
  return (dim + 2 * p - spec.n) / spec.stride + 1;
}

inline void check_conv_fields(const LayerSpec &spec) {
  require_positive(spec.c1, "c1", spec);
  require_positive(spec.c2, "c2", spec);
  require_positive(spec.n, "n", spec);
  require_positive(spec.stride, "stride", spec);
  require_positive(spec.in_h, "in_h", spec);
  require_positive(spec.in_w, "in_w", spec);
}

inline void check_ghost_fields(const LayerSpec &spec) {
  check_conv_fields(spec);
  require_positive(spec.s, "s", spec);
  require_positive(spec.l, "l", spec);
  if (spec.c2 % spec.s != 0)
    throw spec_error(layer_label(spec) + ": ghost ratio s=" + std::to_string(spec.s) +
                     " does not divide c2=" + std::to_string(spec.c2));
}

inline std::uint64_t norm_params(std::uint64_t channels, bool bn, bool bias, NormAccounting acct) {
  if (acct == NormAccounting::fused)
    return (bn || bias) ? channels : 0;
  return (bn ? 2 * channels : 0) + (bias ? channels : 0);
}

} // namespace detail

/// Output spatial dims of a conv or ghost_conv layer.
inline OutputShape conv_output(const LayerSpec &spec) {
  return {detail::out_dim(spec.in_h, spec), detail::out_dim(spec.in_w, spec), spec.c2};
}

/// h2*w2*c2*c1*n*n.
inline std::uint64_t conv_flops(const LayerSpec &spec) {
  detail::require_kind(spec, LayerKind::conv);
  detail::check_conv_fields(spec);
  const auto o = conv_output(spec);
  return std::uint64_t{o.h} * o.w * spec.c2 * spec.c1 * spec.n * spec.n;
}

/// h2*w2*(c2/s)*c1*n*n + (s-1)*h2*w2*(c2/s)*l*l.
inline std::uint64_t ghost_flops(const LayerSpec &spec) {
  detail::require_kind(spec, LayerKind::ghost_conv);
  detail::check_ghost_fields(spec);
  const auto o = conv_output(spec);
  const std::uint64_t hw = std::uint64_t{o.h} * o.w;
  const std::uint64_t intrinsic = spec.c2 / spec.s;
  return hw * intrinsic * spec.c1 * spec.n * spec.n +
         (spec.s - 1) * hw * intrinsic * spec.l * spec.l;
}

/// Two FC layers c*(c/r) each, plus the channel-wise rescale of h*w*c elements.
inline std::uint64_t se_flops(const LayerSpec &spec) {
  detail::require_kind(spec, LayerKind::se);
  detail::require_positive(spec.c1, "c1", spec);
  detail::require_positive(spec.r, "r", spec);
  if (spec.c1 % spec.r != 0)
    throw spec_error(detail::layer_label(spec) + ": SE reduction r does not divide channels");
  const std::uint64_t c = spec.c1;
  return 2 * c * (c / spec.r) + std::uint64_t{spec.in_h} * spec.in_w * c;
}

/// Flattened in_h*in_w*c1 inputs times c2 outputs.
inline std::uint64_t fc_flops(const LayerSpec &spec) {
  detail::require_kind(spec, LayerKind::fc);
  detail::require_positive(spec.c1, "c1", spec);
  detail::require_positive(spec.c2, "c2", spec);
  const std::uint64_t in = std::uint64_t{spec.c1} * std::max<std::size_t>(spec.in_h, 1) *
                           std::max<std::size_t>(spec.in_w, 1);
  return in * spec.c2;
}

inline std::uint64_t layer_flops(const LayerSpec &spec) {
  switch (spec.kind) {
  case LayerKind::conv: return conv_flops(spec);
  case LayerKind::ghost_conv: return ghost_flops(spec);
  case LayerKind::se: return se_flops(spec);
  case LayerKind::fc: return fc_flops(spec);
  case LayerKind::other_fixed: return spec.fixed_flops;
  case LayerKind::concat:
  case LayerKind::upsample:
  case LayerKind::add: return 0;
  }
  throw spec_error("unknown layer kind");
}

inline std::uint64_t layer_params(const LayerSpec &spec,
                                  NormAccounting acct = NormAccounting::affine) {
  switch (spec.kind) {
  case LayerKind::conv: {
    detail::check_conv_fields(spec);
    return std::uint64_t{spec.c1} * spec.c2 * spec.n * spec.n +
           detail::norm_params(spec.c2, spec.bn, spec.bias, acct);
  }
  case LayerKind::ghost_conv: {
    detail::check_ghost_fields(spec);
    const std::uint64_t intrinsic = spec.c2 / spec.s;
    const std::uint64_t cheap = (spec.s - 1) * intrinsic;
    return std::uint64_t{spec.c1} * intrinsic * spec.n * spec.n +
           detail::norm_params(intrinsic, spec.bn, spec.bias, acct) + cheap * spec.l * spec.l +
           detail::norm_params(cheap, spec.bn, spec.bias, acct);
  }
  case LayerKind::se: {
    detail::require_positive(spec.c1, "c1", spec);
    detail::require_positive(spec.r, "r", spec);
    if (spec.c1 % spec.r != 0)
      throw spec_error(detail::layer_label(spec) + ": SE reduction r does not divide channels");
    const std::uint64_t c = spec.c1;
    const std::uint64_t hidden = c / spec.r;
    return 2 * c * hidden + (spec.bias ? c + hidden : 0);
  }
  case LayerKind::fc: {
    const std::uint64_t in = std::uint64_t{spec.c1} * std::max<std::size_t>(spec.in_h, 1) *
                             std::max<std::size_t>(spec.in_w, 1);
    return in * spec.c2 + (spec.bias ? spec.c2 : 0);
  }
  case LayerKind::other_fixed: return spec.fixed_params;
  case LayerKind::concat:
  case LayerKind::upsample:
  case LayerKind::add: return 0;
  }
  throw spec_error("unknown layer kind");
}

struct SpeedupRatio {
  double exact;
  double approx;
};

/// conv/ghost FLOPs ratio for the same layer, and the closed form s*c1/(s+c1-1).
inline SpeedupRatio speedup_ratio(const LayerSpec &spec) {
  detail::require_kind(spec, LayerKind::ghost_conv);
  LayerSpec plain = spec;
  plain.kind = LayerKind::conv;
  const auto conv = conv_flops(plain);
  const auto ghost = ghost_flops(spec);
  const double s = static_cast<double>(spec.s);
  const double c1 = static_cast<double>(spec.c1);
  return {static_cast<double>(conv) / static_cast<double>(ghost), s * c1 / (s + c1 - 1.0)};
}

struct ModelSpec {
  std::string name;
  std::size_t input_h = 0;
  std::size_t input_w = 0;
  std::size_t input_c = 3;
  std::vector<LayerSpec> layers;
};

struct LayerReport {
  std::size_t index = 0;
  std::string name;
  LayerKind kind = LayerKind::conv;
  OutputShape out;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

struct ModelReport {
  std::string name;
  NormAccounting accounting = NormAccounting::affine;
  std::vector<LayerReport> layers;
  std::uint64_t total_params = 0;
  std::uint64_t total_flops = 0;
};

struct ModelDelta {
  std::string base;
  std::string variant;
  std::int64_t param_change = 0;
  std::int64_t flops_change = 0;
  /// 1 - variant/base; positive means the variant is smaller.
  double param_reduction = 0.0;
  double flops_reduction = 0.0;
};

namespace detail {

inline std::string layer_ref(std::size_t i, const LayerSpec &spec) {
  return "layer " + std::to_string(i) + " (" + layer_label(spec) + ")";
}

inline void check_declared(std::size_t i, const LayerSpec &spec, const char *field,
                           std::size_t declared, std::size_t actual) {
  if (declared != 0 && declared != actual)
    throw spec_error(layer_ref(i, spec) + ": declared " + field + "=" + std::to_string(declared) +
                     " but its input provides " + std::to_string(actual));
}

} // namespace detail

/**
 * @brief Fills in every layer's input dims from the graph and validates them.
 *
 * Returns the completed layer list (c1/in_h/in_w set) plus each layer's
 * output shape. Throws spec_error naming the first inconsistent layer.
 */
inline std::vector<std::pair<LayerSpec, OutputShape>> resolve(const ModelSpec &model) {
  if (model.input_h == 0 || model.input_w == 0 || model.input_c == 0)
    throw spec_error("model '" + model.name + "': input dims must be positive");
  std::vector<std::pair<LayerSpec, OutputShape>> out;
  out.reserve(model.layers.size());
  const OutputShape input{model.input_h, model.input_w, model.input_c};

  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    LayerSpec spec = model.layers[i];
    if (spec.from.empty())
      throw spec_error(detail::layer_ref(i, spec) + ": empty 'from' list");
    std::vector<OutputShape> ins;
    for (int f : spec.from) {
      const long idx = f < 0 ? static_cast<long>(i) + f : f;
      if (idx == -1 && i == 0 && f == -1) {
        ins.push_back(input);
      } else if (idx < 0 || idx >= static_cast<long>(i)) {
        throw spec_error(detail::layer_ref(i, spec) + ": 'from' index " + std::to_string(f) +
                         " does not name an earlier layer");
      } else {
        ins.push_back(out[static_cast<std::size_t>(idx)].second);
      }
    }

    const bool multi = spec.kind == LayerKind::concat || spec.kind == LayerKind::add;
    if (!multi && ins.size() != 1)
      throw spec_error(detail::layer_ref(i, spec) + ": takes exactly one input");
    if (multi && ins.size() < 2)
      throw spec_error(detail::layer_ref(i, spec) + ": needs at least two inputs");

    OutputShape in = ins.front();
    if (multi) {
      std::size_t channels = 0;
      for (const auto &s : ins) {
        if (s.h != in.h || s.w != in.w)
          throw spec_error(detail::layer_ref(i, spec) + ": inputs have different spatial dims");
        if (spec.kind == LayerKind::add && s.c != in.c)
          throw spec_error(detail::layer_ref(i, spec) + ": inputs have different channel counts");
        channels += s.c;
      }
      if (spec.kind == LayerKind::concat)
        in.c = channels;
    }

    detail::check_declared(i, spec, "c1", spec.c1, in.c);
    detail::check_declared(i, spec, "in_h", spec.in_h, in.h);
    detail::check_declared(i, spec, "in_w", spec.in_w, in.w);
    spec.c1 = in.c;
    spec.in_h = in.h;
    spec.in_w = in.w;

    OutputShape o;
    try {
      switch (spec.kind) {
      case LayerKind::conv:
        detail::check_conv_fields(spec);
        o = conv_output(spec);
        break;
      case LayerKind::ghost_conv:
        detail::check_ghost_fields(spec);
        o = conv_output(spec);
        break;
      case LayerKind::se:
        if (spec.c2 != 0 && spec.c2 != spec.c1)
          throw spec_error(detail::layer_label(spec) + ": SE output channels must equal input");
        spec.c2 = spec.c1;
        o = in;
        break;
      case LayerKind::fc:
        detail::require_positive(spec.c2, "c2", spec);
        o = {1, 1, spec.c2};
        break;
      case LayerKind::other_fixed:
        o = {in.h, in.w, spec.c2 != 0 ? spec.c2 : in.c};
        break;
      case LayerKind::concat:
      case LayerKind::add:
        o = in;
        break;
      case LayerKind::upsample:
        detail::require_positive(spec.scale, "scale", spec);
        o = {in.h * spec.scale, in.w * spec.scale, in.c};
        break;
      }
      layer_params(spec); // validates kind-specific fields
      layer_flops(spec);
    } catch (const spec_error &e) {
      throw spec_error(detail::layer_ref(i, spec) + ": " + e.what());
    }
    out.emplace_back(std::move(spec), o);
  }
  return out;
}

inline ModelReport summarize(const ModelSpec &model,
                             NormAccounting acct = NormAccounting::affine) {
  ModelReport rep;
  rep.name = model.name;
  rep.accounting = acct;
  const auto resolved = resolve(model);
  for (std::size_t i = 0; i < resolved.size(); ++i) {
    const auto &[spec, shape] = resolved[i];
    LayerReport lr{i, spec.name, spec.kind, shape, layer_params(spec, acct), layer_flops(spec)};
    rep.total_params += lr.params;
    rep.total_flops += lr.flops;
    rep.layers.push_back(std::move(lr));
  }
  return rep;
}

/// Totals over a slice of per-layer rows.
inline std::pair<std::uint64_t, std::uint64_t> sum_layers(std::span<const LayerReport> rows) {
  std::uint64_t p = 0, f = 0;
  for (const auto &r : rows) {
    p += r.params;
    f += r.flops;
  }
  return {p, f};
}

inline ModelDelta compare(const ModelReport &base, const ModelReport &variant) {
  ModelDelta d;
  d.base = base.name;
  d.variant = variant.name;
  d.param_change = static_cast<std::int64_t>(variant.total_params) -
                   static_cast<std::int64_t>(base.total_params);
  d.flops_change = static_cast<std::int64_t>(variant.total_flops) -
                   static_cast<std::int64_t>(base.total_flops);
  if (base.total_params > 0)
    d.param_reduction = 1.0 - static_cast<double>(variant.total_params) /
                                  static_cast<double>(base.total_params);
  if (base.total_flops > 0)
    d.flops_reduction = 1.0 - static_cast<double>(variant.total_flops) /
                                  static_cast<double>(base.total_flops);
  return d;
}

} // namespace ffm::cost
