// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ffm/error.hpp"

/**
 * Desk-scale reference implementations of the convolution, squeeze-and-
 * excitation and Ghost operators. Nothing here is fast; every op optionally
 * reports the number of multiply-accumulates it actually executed so the
 * analytical cost model can be checked against real execution.
 */
namespace ffm::nn {

/// Counts executed multiply-accumulates. One counter per invocation.
struct MacCounter {
  std::uint64_t macs = 0;
};

/// Height x width x channels feature map, stored HWC (channel fastest).
class FeatureMap {
public:
  FeatureMap(std::size_t h, std::size_t w, std::size_t c) : h_(h), w_(w), c_(c), data_(h * w * c) {
    if (h == 0 || w == 0 || c == 0)
      throw shape_error("feature map dimensions must be >= 1");
  }
  FeatureMap(std::size_t h, std::size_t w, std::size_t c, std::vector<double> data)
      : FeatureMap(h, w, c) {
    if (data.size() != h * w * c)
      throw shape_error("feature map data length " + std::to_string(data.size()) +
                        " != h*w*c = " + std::to_string(h * w * c));
    data_ = std::move(data);
  }

  std::size_t h() const noexcept { return h_; }
  std::size_t w() const noexcept { return w_; }
  std::size_t c() const noexcept { return c_; }

  double &at(std::size_t i, std::size_t j, std::size_t ch) noexcept {
    return data_[(i * w_ + j) * c_ + ch];
  }
  double at(std::size_t i, std::size_t j, std::size_t ch) const noexcept {
    return data_[(i * w_ + j) * c_ + ch];
  }

  const std::vector<double> &data() const noexcept { return data_; }
  std::vector<double> &data() noexcept { return data_; }

private:
  std::size_t h_;
  std::size_t w_;
  std::size_t c_;
  std::vector<double> data_;
};

/// Dense square kernels, weights laid out [out][in][ky][kx].
struct ConvKernelSet {
  ConvKernelSet(std::size_t out_channels_, std::size_t in_channels_, std::size_t k_,
                std::vector<double> weights_)
      : out_channels(out_channels_), in_channels(in_channels_), k(k_),
        weights(std::move(weights_)) {
    if (out_channels == 0 || in_channels == 0 || k == 0)
      throw shape_error("kernel set dimensions must be >= 1");
    if (weights.size() != out_channels * in_channels * k * k)
      throw shape_error("kernel weights length does not match c2*c1*k*k");
  }

  double at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const noexcept {
    return weights[((o * in_channels + i) * k + ky) * k + kx];
  }

  std::size_t out_channels;
  std::size_t in_channels;
  std::size_t k;
  std::vector<double> weights;
};

/// One square kernel per channel, weights laid out [channel][ky][kx].
struct DepthwiseKernelSet {
  DepthwiseKernelSet(std::size_t channels_, std::size_t k_, std::vector<double> weights_)
      : channels(channels_), k(k_), weights(std::move(weights_)) {
    if (channels == 0 || k == 0)
      throw shape_error("depthwise kernel dimensions must be >= 1");
    if (weights.size() != channels * k * k)
      throw shape_error("depthwise weights length does not match channels*k*k");
  }

  double at(std::size_t ch, std::size_t ky, std::size_t kx) const noexcept {
    return weights[(ch * k + ky) * k + kx];
  }

  std::size_t channels;
  std::size_t k;
  std::vector<double> weights;
};

/// Two fully connected layers c -> c/r -> c. Matrices are row-major
/// (fc1 is (c/r) x c, fc2 is c x (c/r)); biases default to zero.
struct SEWeights {
  SEWeights(std::size_t c_, std::size_t r_, std::vector<double> fc1_, std::vector<double> fc2_,
            std::vector<double> b1_ = {}, std::vector<double> b2_ = {})
      : c(c_), r(r_), fc1(std::move(fc1_)), fc2(std::move(fc2_)), b1(std::move(b1_)),
        b2(std::move(b2_)) {
    if (c == 0 || r == 0 || c % r != 0)
      throw shape_error("SE reduction ratio must divide the channel count");
    const std::size_t hidden = c / r;
    if (fc1.size() != hidden * c || fc2.size() != c * hidden)
      throw shape_error("SE fully connected weights have the wrong size");
    if (b1.empty())
      b1.assign(hidden, 0.0);
    if (b2.empty())
      b2.assign(c, 0.0);
    if (b1.size() != hidden || b2.size() != c)
      throw shape_error("SE bias vectors have the wrong size");
  }

  std::size_t hidden() const noexcept { return c / r; }

  std::size_t c;
  std::size_t r;
  std::vector<double> fc1;
  std::vector<double> fc2;
  std::vector<double> b1;
  std::vector<double> b2;
};

/// floor((dim + 2*pad - k) / stride) + 1, or throws when the kernel does not fit.
inline std::size_t conv_out_dim(std::size_t dim, std::size_t k, std::size_t stride,
                                std::size_t pad) {
  if (stride == 0)
    throw shape_error("stride must be >= 1");
  if (dim + 2 * pad < k)
    throw shape_error("kernel (" + std::to_string(k) + ") larger than padded input (" +
                      std::to_string(dim + 2 * pad) + ")");
  return (dim + 2 * pad - k) / stride + 1;
}

/**
 * @brief Direct cross-correlation with zero padding.
 *
 * Every kernel tap is applied, padded positions included, so the MAC count is
 * exactly h2*w2*c2*c1*k*k.
 */
inline FeatureMap conv2d_direct(const FeatureMap &x, const ConvKernelSet &k, std::size_t stride,
                                std::size_t pad, MacCounter *counter = nullptr) {
  if (k.in_channels != x.c())
    throw shape_error("kernel expects " + std::to_string(k.in_channels) +
                      " input channels, map has " + std::to_string(x.c()));
  const std::size_t oh = conv_out_dim(x.h(), k.k, stride, pad);
  const std::size_t ow = conv_out_dim(x.w(), k.k, stride, pad);
  FeatureMap y(oh, ow, k.out_channels);
  std::uint64_t macs = 0;
  const auto ih = static_cast<std::ptrdiff_t>(x.h());
  const auto iw = static_cast<std::ptrdiff_t>(x.w());
  for (std::size_t oi = 0; oi < oh; ++oi) {
    for (std::size_t oj = 0; oj < ow; ++oj) {
      for (std::size_t o = 0; o < k.out_channels; ++o) {
        double acc = 0.0;
        for (std::size_t ky = 0; ky < k.k; ++ky) {
          const auto yi = static_cast<std::ptrdiff_t>(oi * stride + ky) -
                          static_cast<std::ptrdiff_t>(pad);
          for (std::size_t kx = 0; kx < k.k; ++kx) {
            const auto xj = static_cast<std::ptrdiff_t>(oj * stride + kx) -
                            static_cast<std::ptrdiff_t>(pad);
            const bool inside = yi >= 0 && yi < ih && xj >= 0 && xj < iw;
            for (std::size_t c = 0; c < k.in_channels; ++c) {
              const double v = inside ? x.at(static_cast<std::size_t>(yi),
                                              static_cast<std::size_t>(xj), c)
                                      : 0.0;
              acc += k.at(o, c, ky, kx) * v;
            }
            macs += k.in_channels;
          }
        }
        y.at(oi, oj, o) = acc;
      }
    }
  }
  if (counter)
    counter->macs += macs;
  return y;
}

/// Per-channel convolution, stride 1, padding k/2 (k odd keeps spatial dims).
/// Input channel `ch / multiplier` feeds output channel `ch`.
inline FeatureMap depthwise_conv(const FeatureMap &x, const DepthwiseKernelSet &k,
                                 MacCounter *counter = nullptr) {
  if (k.channels % x.c() != 0)
    throw shape_error("depthwise channel count must be a multiple of the input channels");
  const std::size_t mult = k.channels / x.c();
  const std::size_t pad = k.k / 2;
  const std::size_t oh = conv_out_dim(x.h(), k.k, 1, pad);
  const std::size_t ow = conv_out_dim(x.w(), k.k, 1, pad);
  FeatureMap y(oh, ow, k.channels);
  std::uint64_t macs = 0;
  const auto ih = static_cast<std::ptrdiff_t>(x.h());
  const auto iw = static_cast<std::ptrdiff_t>(x.w());
  for (std::size_t oi = 0; oi < oh; ++oi) {
    for (std::size_t oj = 0; oj < ow; ++oj) {
      for (std::size_t ch = 0; ch < k.channels; ++ch) {
        const std::size_t src = ch / mult;
        double acc = 0.0;
        for (std::size_t ky = 0; ky < k.k; ++ky) {
          const auto yi = static_cast<std::ptrdiff_t>(oi + ky) - static_cast<std::ptrdiff_t>(pad);
          for (std::size_t kx = 0; kx < k.k; ++kx) {
            const auto xj =
                static_cast<std::ptrdiff_t>(oj + kx) - static_cast<std::ptrdiff_t>(pad);
            if (yi >= 0 && yi < ih && xj >= 0 && xj < iw)
              acc += k.at(ch, ky, kx) *
                     x.at(static_cast<std::size_t>(yi), static_cast<std::size_t>(xj), src);
            ++macs;
          }
        }
        y.at(oi, oj, ch) = acc;
      }
    }
  }
  if (counter)
    counter->macs += macs;
  return y;
}

inline double sigmoid(double v) noexcept { return 1.0 / (1.0 + std::exp(-v)); }

/// Global average pool: one descriptor per channel.
inline std::vector<double> squeeze(const FeatureMap &x) {
  std::vector<double> z(x.c(), 0.0);
  for (std::size_t i = 0; i < x.h(); ++i)
    for (std::size_t j = 0; j < x.w(); ++j)
      for (std::size_t c = 0; c < x.c(); ++c)
        z[c] += x.at(i, j, c);
  const double n = static_cast<double>(x.h() * x.w());
  for (auto &v : z)
    v /= n;
  return z;
}

/// Channel gates s_c in (0, 1): sigmoid(fc2 * relu(fc1 * z + b1) + b2).
inline std::vector<double> excite(const std::vector<double> &z, const SEWeights &w,
                                  MacCounter *counter = nullptr) {
  const std::size_t hid = w.hidden();
  std::vector<double> a(hid);
  for (std::size_t o = 0; o < hid; ++o) {
    double acc = w.b1[o];
    for (std::size_t c = 0; c < w.c; ++c)
      acc += w.fc1[o * w.c + c] * z[c];
    a[o] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> s(w.c);
  for (std::size_t c = 0; c < w.c; ++c) {
    double acc = w.b2[c];
    for (std::size_t o = 0; o < hid; ++o)
      acc += w.fc2[c * hid + o] * a[o];
    s[c] = sigmoid(acc);
  }
  if (counter)
    counter->macs += 2 * w.c * hid;
  return s;
}

/**
 * @brief Squeeze-and-excitation: rescales every channel by its learned gate.
 *
 * MACs counted: the two FC layers (2*c*c/r) plus one multiply per output
 * element (h*w*c). Pooling sums are additions and are not counted.
 */
inline FeatureMap se_forward(const FeatureMap &x, const SEWeights &w,
                             MacCounter *counter = nullptr) {
  if (w.c != x.c())
    throw shape_error("SE weights expect " + std::to_string(w.c) + " channels, map has " +
                      std::to_string(x.c()));
  const auto s = excite(squeeze(x), w, counter);
  FeatureMap y(x.h(), x.w(), x.c());
  for (std::size_t i = 0; i < x.h(); ++i)
    for (std::size_t j = 0; j < x.w(); ++j)
      for (std::size_t c = 0; c < x.c(); ++c)
        y.at(i, j, c) = s[c] * x.at(i, j, c);
  if (counter)
    counter->macs += x.h() * x.w() * x.c();
  return y;
}

/**
 * @brief Ghost module: a thin intrinsic convolution plus cheap depthwise maps.
 *
 * `primary` produces c2/s intrinsic channels. `cheap` holds (s-1)*c2/s
 * depthwise l x l kernels, s-1 per intrinsic channel. The output is the
 * intrinsic maps followed by the cheap maps, c2 channels in total.
 */
inline FeatureMap ghost_forward(const FeatureMap &x, const ConvKernelSet &primary,
                                const DepthwiseKernelSet &cheap, std::size_t s,
                                std::size_t stride, std::size_t pad,
                                MacCounter *counter = nullptr) {
  if (s == 0)
    throw shape_error("ghost ratio s must be >= 1");
  const std::size_t intrinsic = primary.out_channels;
  const std::size_t c2 = intrinsic * s;
  FeatureMap inner = conv2d_direct(x, primary, stride, pad, counter);
  if (s == 1)
    return inner;
  if (cheap.channels != (s - 1) * intrinsic)
    throw shape_error("cheap branch must have (s-1)*c2/s = " +
                      std::to_string((s - 1) * intrinsic) + " channels");
  if (cheap.k % 2 == 0)
    throw shape_error("cheap kernel size must be odd to preserve spatial dims");
  FeatureMap ghost = depthwise_conv(inner, cheap, counter);
  FeatureMap y(inner.h(), inner.w(), c2);
  for (std::size_t i = 0; i < y.h(); ++i) {
    for (std::size_t j = 0; j < y.w(); ++j) {
      for (std::size_t c = 0; c < intrinsic; ++c)
        y.at(i, j, c) = inner.at(i, j, c);
      for (std::size_t c = 0; c < cheap.channels; ++c)
        y.at(i, j, intrinsic + c) = ghost.at(i, j, c);
    }
  }
  return y;
}

/// Fully connected layer over a flattened input; weights row-major out x in.
inline std::vector<double> fc_forward(const std::vector<double> &x, std::size_t out,
                                      const std::vector<double> &weights,
                                      const std::vector<double> &bias = {},
                                      MacCounter *counter = nullptr) {
  if (out == 0 || weights.size() != out * x.size())
    throw shape_error("fully connected weights must be out x in");
  if (!bias.empty() && bias.size() != out)
    throw shape_error("fully connected bias must have one entry per output");
  std::vector<double> y(out);
  for (std::size_t o = 0; o < out; ++o) {
    double acc = bias.empty() ? 0.0 : bias[o];
    for (std::size_t i = 0; i < x.size(); ++i)
      acc += weights[o * x.size() + i] * x[i];
    y[o] = acc;
  }
  if (counter)
    counter->macs += out * x.size();
  return y;
}

/// Ghost forward taking the output channel count explicitly; throws when s
/// does not divide c2 or the kernel sets disagree with it.
inline FeatureMap ghost_forward(const FeatureMap &x, std::size_t c2, const ConvKernelSet &primary,
                                const DepthwiseKernelSet &cheap, std::size_t s,
                                std::size_t stride, std::size_t pad,
                                MacCounter *counter = nullptr) {
  if (s == 0 || c2 % s != 0)
    throw shape_error("ghost ratio s=" + std::to_string(s) + " does not divide c2=" +
                      std::to_string(c2));
  if (primary.out_channels != c2 / s)
    throw shape_error("primary convolution must produce c2/s channels");
  return ghost_forward(x, primary, cheap, s, stride, pad, counter);
}

} // namespace ffm::nn
