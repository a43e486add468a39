// Copyright 2026 The qfx Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QFX_LAYERNORM_HPP_
#define QFX_LAYERNORM_HPP_

// Integer LayerNorm on raw values:
//   y = (g*X - g*mu(X) + b*sigma(X)) / sigma(X)
// Scale and zero point cancel, so only raw values enter.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "qfx/detail/wide_uint.hpp"
#include "qfx/mac_counter.hpp"
#include "qfx/tensor.hpp"

namespace qfx {

struct LayerNormConfig {
  QFormat in_fmt = S(7);
  QFormat out_fmt = S(8, 7);
  QFormat mean_fmt = S(8, 7);
  QFormat std_fmt = U(8, 6);
  QFormat param_fmt = S(5, 10);  // gamma and beta
  std::vector<double> gamma;
  std::vector<double> beta;
  double epsilon = 1e-5;  // reference path only

  // gamma = 1, beta = 0 over c channels.
  static LayerNormConfig identity(std::size_t c, QFormat in = S(7)) {
    LayerNormConfig cfg;
    cfg.in_fmt = in;
    cfg.gamma.assign(c, 1.0);
    cfg.beta.assign(c, 0.0);
    return cfg;
  }

  void validate(std::size_t channels) const {
    require_valid(in_fmt, "layernorm in_fmt");
    require_valid(out_fmt, "layernorm out_fmt");
    require_valid(mean_fmt, "layernorm mean_fmt");
    require_valid(std_fmt, "layernorm std_fmt");
    require_valid(param_fmt, "layernorm param_fmt");
    if (gamma.size() != channels || beta.size() != channels)
      fail(Errc::kShapeMismatch, "layernorm: gamma/beta length must equal C = " +
                                     std::to_string(channels));
    if (!(epsilon > 0.0)) fail(Errc::kInvalidArgument, "layernorm: epsilon must be > 0");
    const int need = in_fmt.magnitude_bits();
    if (!mean_fmt.is_signed || mean_fmt.int_bits < need)
      fail(Errc::kInvalidFormat, "layernorm: mean_fmt " + mean_fmt.str() +
                                     " cannot hold the mean of " + in_fmt.str());
    if (std_fmt.is_signed || std_fmt.int_bits < need)
      fail(Errc::kInvalidFormat, "layernorm: std_fmt " + std_fmt.str() +
                                     " cannot hold the deviation of " + in_fmt.str());
    if (channels < 2) fail(Errc::kEmptyInput, "layernorm: need C >= 2");
  }
};

inline std::vector<double> layernorm_ref(std::span<const double> x,
                                         std::span<const double> gamma,
                                         std::span<const double> beta,
                                         double epsilon) {
  const std::size_t c = x.size();
  if (c < 2) fail(Errc::kEmptyInput, "layernorm_ref: need C >= 2");
  if (gamma.size() != c || beta.size() != c)
    fail(Errc::kShapeMismatch, "layernorm_ref: gamma/beta length mismatch");
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(c);
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(c);
  const double inv = 1.0 / std::sqrt(var + epsilon);
  std::vector<double> y(c);
  for (std::size_t i = 0; i < c; ++i) y[i] = (x[i] - mu) * inv * gamma[i] + beta[i];
  return y;
}

// floor(sqrt(v))
inline uint64_t isqrt(detail::uint128 v) {
  if (v == 0) return 0;
  uint64_t r = static_cast<uint64_t>(std::sqrt(static_cast<long double>(v)));
  while (static_cast<detail::uint128>(r) * r > v) --r;
  while (static_cast<detail::uint128>(r + 1) * (r + 1) <= v) ++r;
  return r;
}

struct LayerNormStats {
  int64_t mean_raw;  // mean_fmt
  int64_t std_raw;   // std_fmt, floored at 1 LSB
};

inline LayerNormStats layernorm_stats(std::span<const int64_t> x,
                                      const LayerNormConfig& cfg,
                                      uint64_t* macs = nullptr) {
  const auto c = static_cast<int64_t>(x.size());
  const int mf = cfg.mean_fmt.frac_bits;
  const int sf = cfg.std_fmt.frac_bits;
  int64_t sum = 0;
  for (int64_t v : x) sum += v;
  const int64_t mean = saturate(round_div<int64_t>(sum * (int64_t{1} << mf), c),
                                cfg.mean_fmt);
  detail::uint128 ss = 0;
  for (int64_t v : x) {
    const detail::int128 d = static_cast<detail::int128>(v) * (int64_t{1} << mf) - mean;
    ss += static_cast<detail::uint128>(d * d);
    if (macs) ++*macs;
  }
  // Variance in std_fmt units squared: ss * 2^(2sf - 2mf) / C, floored.
  detail::uint128 operand;
  if (sf >= mf)
    operand = (ss << (2 * (sf - mf))) / static_cast<detail::uint128>(c);
  else
    operand = ss / (static_cast<detail::uint128>(c) << (2 * (mf - sf)));
  int64_t sd = static_cast<int64_t>(isqrt(operand));
  sd = saturate(std::max<int64_t>(sd, 1), cfg.std_fmt);
  return {mean, sd};
}

inline std::vector<int64_t> layernorm_fixed_row(std::span<const int64_t> x,
                                                const LayerNormConfig& cfg) {
  cfg.validate(x.size());
  for (int64_t v : x)
    if (!in_range(v, cfg.in_fmt))
      fail(Errc::kInvalidArgument, "layernorm: raw value outside " + cfg.in_fmt.str());
  uint64_t macs = 0;
  const auto [mean, sd] = layernorm_stats(x, cfg, &macs);
  const int mf = cfg.mean_fmt.frac_bits;
  const int sf = cfg.std_fmt.frac_bits;
  const int pf = cfg.param_fmt.frac_bits;
  const int of = cfg.out_fmt.frac_bits;
  // y_raw = (g*d*2^(sf+of) + b*sd*2^(mf+of)) / (sd*2^(pf+mf))
  const detail::int128 den = static_cast<detail::int128>(sd) << (pf + mf);
  std::vector<int64_t> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int64_t g = quantize(cfg.gamma[i], cfg.param_fmt);
    const int64_t b = quantize(cfg.beta[i], cfg.param_fmt);
    const detail::int128 d = static_cast<detail::int128>(x[i]) * (int64_t{1} << mf) - mean;
    const detail::int128 num = ((static_cast<detail::int128>(g) * d) << (sf + of)) +
                         ((static_cast<detail::int128>(b) * sd) << (mf + of));
    macs += 2;
    const detail::int128 q = round_div<detail::int128>(num, den);
    y[i] = q > cfg.out_fmt.raw_max()   ? cfg.out_fmt.raw_max()
           : q < cfg.out_fmt.raw_min() ? cfg.out_fmt.raw_min()
                                       : static_cast<int64_t>(q);
  }
  publish_macs(macs);
  return y;
}

// Normalizes over the last axis.
inline FixedTensor layernorm_fixed(const FixedTensor& x, const LayerNormConfig& cfg) {
  if (x.format != cfg.in_fmt)
    fail(Errc::kInvalidFormat, "layernorm: tensor format " + x.format.str() +
                                   " does not match in_fmt " + cfg.in_fmt.str());
  const std::size_t c = x.shape.empty() ? x.size() : x.shape.back();
  if (c < 2) fail(Errc::kEmptyInput, "layernorm: need C >= 2");
  FixedTensor out(x.shape, cfg.out_fmt);
  for (std::size_t r = 0; r < x.size() / c; ++r) {
    auto y = layernorm_fixed_row(std::span<const int64_t>(x.raw.data() + r * c, c), cfg);
    std::copy(y.begin(), y.end(), out.raw.begin() + static_cast<std::ptrdiff_t>(r * c));
  }
  return out;
}

inline RealTensor layernorm_ref(const RealTensor& x, const LayerNormConfig& cfg) {
  const std::size_t c = x.shape.empty() ? x.size() : x.shape.back();
  if (c < 2) fail(Errc::kEmptyInput, "layernorm_ref: need C >= 2");
  RealTensor out(x.shape);
  for (std::size_t r = 0; r < x.size() / c; ++r) {
    auto y = layernorm_ref(std::span<const double>(x.values.data() + r * c, c),
                           cfg.gamma, cfg.beta, cfg.epsilon);
    std::copy(y.begin(), y.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * c));
  }
  return out;
}

}  // namespace qfx

#endif  // QFX_LAYERNORM_HPP_
