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

#ifndef QFX_MATMUL_HPP_
#define QFX_MATMUL_HPP_

// Matrix multiplication on an INT4 multiply-accumulate base unit.
//
// Integer operands are split into nibbles: the top nibble is signed, the
// rest unsigned (a = a_hi * 16 + a_lo for int8). One INT4 unit handles one
// nibble of `a` against every nibble of `b` and recombines by shifts, so an
// int8 multiply uses two units and an int16 multiply four.
//
// Zero points: weights (B) must have zero point 0. A nonzero activation zero
// point za is removed with the identity
//   sum_k (a_k - za) * b_k = sum_k a_k * b_k - za * sum_k b_k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "qfx/fp8.hpp"
#include "qfx/mac_counter.hpp"
#include "qfx/tensor.hpp"

namespace qfx {

enum class MacMode { kInt4, kInt8x2, kInt16x4, kFp8E4M3, kFp8E5M2 };
enum class AccKind { kInt32, kInt64, kFp32 };

inline std::string_view to_string(MacMode m) {
  switch (m) {
    case MacMode::kInt4: return "int4";
    case MacMode::kInt8x2: return "int8";
    case MacMode::kInt16x4: return "int16";
    case MacMode::kFp8E4M3: return "e4m3";
    case MacMode::kFp8E5M2: return "e5m2";
  }
  return "?";
}

inline bool parse_mac_mode(std::string_view s, MacMode& out) {
  for (auto m : {MacMode::kInt4, MacMode::kInt8x2, MacMode::kInt16x4,
                 MacMode::kFp8E4M3, MacMode::kFp8E5M2}) {
    if (to_string(m) == s) {
      out = m;
      return true;
    }
  }
  return false;
}

struct MacUnitConfig {
  MacMode mode = MacMode::kInt8x2;

  bool is_fp8() const {
    return mode == MacMode::kFp8E4M3 || mode == MacMode::kFp8E5M2;
  }
  // int16 products reach 2^30, so two of them already overflow int32.
  AccKind acc() const {
    if (is_fp8()) return AccKind::kFp32;
    return mode == MacMode::kInt16x4 ? AccKind::kInt64 : AccKind::kInt32;
  }
  int operand_bits() const {
    switch (mode) {
      case MacMode::kInt4: return 4;
      case MacMode::kInt8x2: return 8;
      default: return 16;
    }
  }
  // Largest K for which the worst-case accumulation cannot overflow.
  uint64_t max_k() const {
    if (is_fp8()) return uint64_t{1} << 24;
    const uint64_t p = uint64_t{1} << (2 * (operand_bits() - 1));
    const uint64_t lim = acc() == AccKind::kInt64
                             ? uint64_t{std::numeric_limits<int64_t>::max()}
                             : uint64_t{std::numeric_limits<int32_t>::max()};
    return lim / p;
  }
};

// acc + a * b for 4-bit operands, each either signed [-8, 7] or unsigned
// [0, 15].
constexpr int32_t mac_int4(int32_t a, int32_t b, int32_t acc) {
  return acc + a * b;
}

// One INT4 unit: nibble n times all nibbles of b (top nibble signed).
template <int Nibbles>
constexpr int32_t int4_unit(int32_t n, int32_t b) {
  int32_t acc = mac_int4(n, b >> (4 * (Nibbles - 1)), 0);
  for (int j = Nibbles - 2; j >= 0; --j)
    acc = mac_int4(n, (b >> (4 * j)) & 15, acc << 4);
  return acc;
}

template <int Nibbles>
constexpr int32_t mul_via_int4(int32_t a, int32_t b) {
  int32_t r = int4_unit<Nibbles>(a >> (4 * (Nibbles - 1)), b);
  for (int j = Nibbles - 2; j >= 0; --j)
    r = (r << 4) + int4_unit<Nibbles>((a >> (4 * j)) & 15, b);
  return r;
}

constexpr int16_t mul_int8_via_int4(int8_t a, int8_t b) {
  return static_cast<int16_t>(mul_via_int4<2>(a, b));
}

constexpr int32_t mul_int16_via_int4(int16_t a, int16_t b) {
  return mul_via_int4<4>(a, b);
}

// Mantissas (hidden bit included) multiply on the INT4 unit; exponents add.
inline float fp8_mac(Fp8Value a, Fp8Value b, float acc) {
  if (fp8_is_nan(a) || fp8_is_nan(b)) return std::numeric_limits<float>::quiet_NaN();
  if (fp8_is_inf(a) || fp8_is_inf(b))
    return static_cast<float>(fp8_decode(a) * fp8_decode(b)) + acc;
  const auto pa = fp8_unpack(a);
  const auto pb = fp8_unpack(b);
  const int32_t m = mac_int4(pa.mantissa, pb.mantissa, 0);
  float p = std::ldexp(static_cast<float>(m), pa.exponent + pb.exponent);
  if (pa.negative != pb.negative) p = -p;
  return acc + p;
}

namespace detail {

inline void check_matmul_shapes(const Shape& a, const Shape& b) {
  if (a.size() != 2 || b.size() != 2)
    fail(Errc::kShapeMismatch, "matmul: operands must be rank 2, got " +
                                   shape_str(a) + " and " + shape_str(b));
  if (a[1] != b[0])
    fail(Errc::kShapeMismatch, "matmul: inner dimensions differ: " +
                                   shape_str(a) + " * " + shape_str(b));
}

inline void check_operand(const FixedTensor& t, const MacUnitConfig& unit,
                          const char* name) {
  const int bits = unit.operand_bits();
  const int64_t lo = -(int64_t{1} << (bits - 1));
  const int64_t hi = (int64_t{1} << (bits - 1)) - 1;
  if (t.format.raw_min() < lo || t.format.raw_max() > hi)
    fail(Errc::kInvalidFormat, std::string("matmul: operand ") + name + " format " +
                                   t.format.str() + " does not fit " +
                                   std::string(to_string(unit.mode)) + " operands");
}

inline void check_k(std::size_t k, const MacUnitConfig& unit) {
  if (k > unit.max_k())
    fail(Errc::kOverflowBound, "matmul: K = " + std::to_string(k) +
                                   " exceeds the overflow bound " +
                                   std::to_string(unit.max_k()) + " of mode " +
                                   std::string(to_string(unit.mode)));
}

// Power of two s with max|v| / s <= limit.
inline double pow2_scale(double maxabs, double limit) {
  if (maxabs == 0.0) return 1.0;
  int e = static_cast<int>(std::ceil(std::log2(maxabs / limit)));
  while (std::ldexp(limit, e) < maxabs) ++e;
  while (std::ldexp(limit, e - 1) >= maxabs) --e;
  return std::ldexp(1.0, e);
}

}  // namespace detail

// Integer accumulators sum_k a[m,k] * b[k,n] over raw values, canonical
// k-order, before any zero-point correction or requantization.
inline std::vector<int64_t> matmul_accumulate(const FixedTensor& a,
                                              const FixedTensor& b,
                                              const MacUnitConfig& unit) {
  detail::check_matmul_shapes(a.shape, b.shape);
  if (unit.is_fp8())
    fail(Errc::kInvalidArgument, "matmul_accumulate: integer modes only");
  detail::check_operand(a, unit, "A");
  detail::check_operand(b, unit, "B");
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  detail::check_k(k, unit);
  std::vector<int64_t> out(m * n);
  uint64_t macs = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int64_t* ar = a.raw.data() + i * k;
      switch (unit.mode) {
        case MacMode::kInt4: {
          int32_t acc = 0;
          for (std::size_t t = 0; t < k; ++t, ++macs)
            acc = mac_int4(static_cast<int32_t>(ar[t]),
                           static_cast<int32_t>(b.raw[t * n + j]), acc);
          out[i * n + j] = acc;
          break;
        }
        case MacMode::kInt8x2: {
          int32_t acc = 0;
          for (std::size_t t = 0; t < k; ++t, ++macs)
            acc += mul_int8_via_int4(static_cast<int8_t>(ar[t]),
                                     static_cast<int8_t>(b.raw[t * n + j]));
          out[i * n + j] = acc;
          break;
        }
        default: {
          int64_t acc = 0;
          for (std::size_t t = 0; t < k; ++t, ++macs)
            acc += mul_int16_via_int4(static_cast<int16_t>(ar[t]),
                                      static_cast<int16_t>(b.raw[t * n + j]));
          out[i * n + j] = acc;
          break;
        }
      }
    }
  }
  publish_macs(macs);
  return out;
}

// C = A * B, requantized into out_fmt with out_params. The real value of an
// integer accumulator is acc * scale_A * scale_B.
inline FixedTensor matmul_fixed(const FixedTensor& a, const FixedTensor& b,
                                const MacUnitConfig& unit, const QFormat& out_fmt,
                                const QuantParams& out_params) {
  detail::check_matmul_shapes(a.shape, b.shape);
  require_valid(out_fmt, "matmul out_fmt");
  require_valid(out_params, "matmul out_params");
  if (b.params.zero_point != 0)
    fail(Errc::kInvalidArgument, "matmul: weight zero point must be 0");
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  FixedTensor out({m, n}, out_fmt, out_params);

  if (!unit.is_fp8()) {
    const auto acc = matmul_accumulate(a, b, unit);
    std::vector<int64_t> colsum(n, 0);
    if (a.params.zero_point != 0)
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t j = 0; j < n; ++j) colsum[j] += b.raw[t * n + j];
    const double s = a.params.scale * b.params.scale;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const int64_t v = acc[i * n + j] - a.params.zero_point * colsum[j];
        out.raw[i * n + j] = quantize(static_cast<double>(v) * s, out_fmt, out_params);
      }
    return out;
  }

  detail::check_k(k, unit);
  const Fp8Format ff = unit.mode == MacMode::kFp8E4M3 ? Fp8Format::kE4M3 : Fp8Format::kE5M2;
  const double limit = fp8_max_finite(ff);
  std::vector<double> sa(m), sb(n);
  std::vector<Fp8Value> ca(m * k), cb(k * n);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = 0;
    for (std::size_t t = 0; t < k; ++t) mx = std::max(mx, std::abs(a.real(i * k + t)));
    sa[i] = detail::pow2_scale(mx, limit);
    for (std::size_t t = 0; t < k; ++t) ca[i * k + t] = fp8_encode(a.real(i * k + t) / sa[i], ff);
  }
  for (std::size_t j = 0; j < n; ++j) {
    double mx = 0;
    for (std::size_t t = 0; t < k; ++t) mx = std::max(mx, std::abs(b.real(t * n + j)));
    sb[j] = detail::pow2_scale(mx, limit);
    for (std::size_t t = 0; t < k; ++t) cb[t * n + j] = fp8_encode(b.real(t * n + j) / sb[j], ff);
  }
  uint64_t macs = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (std::size_t t = 0; t < k; ++t, ++macs)
        acc = fp8_mac(ca[i * k + t], cb[t * n + j], acc);
      out.raw[i * n + j] =
          quantize(static_cast<double>(acc) * sa[i] * sb[j], out_fmt, out_params);
    }
  publish_macs(macs);
  return out;
}

inline RealTensor matmul_ref(const RealTensor& a, const RealTensor& b) {
  detail::check_matmul_shapes(a.shape, b.shape);
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  RealTensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += a.values[i * k + t] * b.values[t * n + j];
      out.values[i * n + j] = acc;
    }
  return out;
}

}  // namespace qfx

#endif  // QFX_MATMUL_HPP_
