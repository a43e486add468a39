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

#ifndef QFX_SOFTMAX_HPP_
#define QFX_SOFTMAX_HPP_

// Base-2 fixed-point softmax.
//
// Terms 2^(x_j - m) are period-exact: 2^d ~= T[idx(d mod 2^F)] * 2^floor(d / 2^F)
// with T the 65-entry pow2 table. The sum of terms is formed exactly in a wide
// integer and rounded once into acc_fmt. The online variant keeps one exact
// bin per fractional residue, so growing the running max only relabels and
// shifts bins; both variants therefore produce the same accumulator bit for
// bit, independent of N and of the order in which the max is discovered.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <tuple>
#include <vector>

#include "qfx/detail/wide_uint.hpp"
#include "qfx/pow2.hpp"
#include "qfx/tensor.hpp"

namespace qfx {

enum class SoftmaxVariant { kThreePass, kTwoPassOnline };

struct SoftmaxConfig {
  QFormat in_fmt = S(6, 9);
  QFormat out_fmt = U(1, 15);
  QFormat acc_fmt = U(10, 10);
  SoftmaxVariant variant = SoftmaxVariant::kThreePass;

  std::size_t capacity() const {
    return (std::size_t{1} << acc_fmt.int_bits) - 1;
  }

  void validate() const {
    require_valid(in_fmt, "softmax in_fmt");
    require_valid(out_fmt, "softmax out_fmt");
    require_valid(acc_fmt, "softmax acc_fmt");
    if (in_fmt.int_bits + (in_fmt.is_signed ? 1 : 0) > 8 || in_fmt.frac_bits > 12)
      fail(Errc::kInvalidFormat, "softmax in_fmt " + in_fmt.str() +
                                     " exceeds S7.12 / U8.12");
    if (out_fmt.is_signed)
      fail(Errc::kInvalidFormat, "softmax out_fmt must be unsigned");
    if (acc_fmt.is_signed || acc_fmt.int_bits < 10 || acc_fmt.int_bits > 20 ||
        acc_fmt.frac_bits > 15)
      fail(Errc::kInvalidFormat,
           "softmax acc_fmt must be unsigned with 10..20 integer and at most "
           "15 fraction bits");
  }
};

// Input scale that makes the base-2 kernel evaluate e^x: a raw step is
// ln(2) * 2^-frac in real units.
inline QuantParams softmax_input_params(const QFormat& in_fmt) {
  return {std::numbers::ln2 * in_fmt.lsb(), 0};
}

inline std::vector<double> softmax_ref(std::span<const double> x) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  const double m = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - m);
    sum += y[i];
  }
  for (auto& v : y) v /= sum;
  return y;
}

// Row-wise over the last axis.
inline RealTensor softmax_ref(const RealTensor& x) {
  RealTensor out(x.shape);
  const std::size_t n = x.shape.empty() ? x.size() : x.shape.back();
  if (n == 0) fail(Errc::kEmptyInput, "softmax_ref: empty rows");
  for (std::size_t r = 0; r < x.size() / n; ++r) {
    auto y = softmax_ref(std::span<const double>(x.values.data() + r * n, n));
    std::copy(y.begin(), y.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  return out;
}

namespace detail {

using SoftmaxWide = WideUint<5>;

inline int softmax_octave_offset(const QFormat& f) {
  return static_cast<int>(((f.raw_max() - f.raw_min()) >> f.frac_bits) + 1);
}

inline int64_t pow2_index(int64_t residue, int frac_bits) {
  return frac_bits >= kPow2TableBits
             ? round_shift(residue, frac_bits - kPow2TableBits)
             : residue << (kPow2TableBits - frac_bits);
}

inline int64_t softmax_round_acc(const SoftmaxWide& sum, int offset,
                                 const QFormat& acc_fmt) {
  const int s = kPow2MantissaFrac + offset - acc_fmt.frac_bits;
  return saturate(static_cast<int64_t>(sum.round_shift(s)), acc_fmt);
}

inline int64_t softmax_acc_three_pass(std::span<const int64_t> x, int64_t m,
                                      const SoftmaxConfig& cfg) {
  const int off = softmax_octave_offset(cfg.in_fmt);
  SoftmaxWide sum;
  for (int64_t v : x) {
    const auto [mant, octave] = pow2_parts(v - m, cfg.in_fmt.frac_bits);
    SoftmaxWide term;
    term.add_pow2(static_cast<int>(octave + off));
    sum.add_mul(term, static_cast<uint64_t>(mant));
  }
  return softmax_round_acc(sum, off, cfg.acc_fmt);
}

// Single streaming pass: returns the row max and the rounded accumulator.
inline std::pair<int64_t, int64_t> softmax_acc_online(std::span<const int64_t> x,
                                                      const SoftmaxConfig& cfg) {
  const int f = cfg.in_fmt.frac_bits;
  const int64_t period = int64_t{1} << f;
  const int off = softmax_octave_offset(cfg.in_fmt);
  std::vector<SoftmaxWide> bins(static_cast<std::size_t>(period));
  std::vector<SoftmaxWide> moved(bins.size());
  int64_t m = x[0];
  for (int64_t v : x) {
    if (v > m) {
      const int64_t delta = v - m;
      for (int64_t r = 0; r < period; ++r) {
        const int64_t t = r - delta;
        const int64_t carry = t >> f;  // floor(t / period), <= 0
        moved[static_cast<std::size_t>(t - carry * period)] =
            bins[static_cast<std::size_t>(r)].shr(static_cast<int>(-carry));
      }
      bins.swap(moved);
      m = v;
    }
    const int64_t d = v - m;
    const int64_t octave = d >> f;
    bins[static_cast<std::size_t>(d - octave * period)].add_pow2(
        static_cast<int>(octave + off));
  }
  SoftmaxWide sum;
  for (int64_t r = 0; r < period; ++r) {
    if (bins[static_cast<std::size_t>(r)].is_zero()) continue;
    sum.add_mul(bins[static_cast<std::size_t>(r)],
                static_cast<uint64_t>(kPow2Table[static_cast<std::size_t>(pow2_index(r, f))]));
  }
  return {m, softmax_round_acc(sum, off, cfg.acc_fmt)};
}

}  // namespace detail

// One row of raw values in cfg.in_fmt to raw values in cfg.out_fmt.
inline std::vector<int64_t> softmax_fixed_row(std::span<const int64_t> x,
                                              const SoftmaxConfig& cfg) {
  cfg.validate();
  if (x.empty()) fail(Errc::kEmptyInput, "softmax: empty row");
  if (x.size() > cfg.capacity())
    fail(Errc::kCapacity, "softmax: row length " + std::to_string(x.size()) +
                              " exceeds accumulator capacity " +
                              std::to_string(cfg.capacity()) + " of " +
                              cfg.acc_fmt.str());
  for (int64_t v : x)
    if (!in_range(v, cfg.in_fmt))
      fail(Errc::kInvalidArgument, "softmax: raw value outside " + cfg.in_fmt.str());

  int64_t m = 0;
  int64_t acc = 0;
  if (cfg.variant == SoftmaxVariant::kThreePass) {
    m = *std::max_element(x.begin(), x.end());
    acc = detail::softmax_acc_three_pass(x, m, cfg);
  } else {
    std::tie(m, acc) = detail::softmax_acc_online(x, cfg);
  }

  const QFormat term_fmt = U(1, kPow2MantissaFrac);
  const int of = cfg.out_fmt.frac_bits;
  const detail::int128 den = static_cast<detail::int128>(acc) << kPow2MantissaFrac;
  std::vector<int64_t> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int64_t num = pow2_fixed(x[i] - m, cfg.in_fmt, term_fmt);
    const detail::int128 q = round_div<detail::int128>(
        static_cast<detail::int128>(num) << (of + cfg.acc_fmt.frac_bits), den);
    y[i] = saturate(static_cast<int64_t>(q), cfg.out_fmt);
  }
  return y;
}

// Row-wise over the last axis. The input format must equal cfg.in_fmt.
inline FixedTensor softmax_fixed(const FixedTensor& x, const SoftmaxConfig& cfg) {
  if (x.format != cfg.in_fmt)
    fail(Errc::kInvalidFormat, "softmax: tensor format " + x.format.str() +
                                   " does not match in_fmt " + cfg.in_fmt.str());
  const std::size_t n = x.shape.empty() ? x.size() : x.shape.back();
  if (n == 0) fail(Errc::kEmptyInput, "softmax: empty row");
  FixedTensor out(x.shape, cfg.out_fmt);
  for (std::size_t r = 0; r < x.size() / n; ++r) {
    auto y = softmax_fixed_row(std::span<const int64_t>(x.raw.data() + r * n, n), cfg);
    std::copy(y.begin(), y.end(), out.raw.begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  return out;
}

}  // namespace qfx

#endif  // QFX_SOFTMAX_HPP_
