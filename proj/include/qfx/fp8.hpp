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

#ifndef QFX_FP8_HPP_
#define QFX_FP8_HPP_

// 8-bit floats. E4M3: bias 7, no infinities, S.1111.111 is NaN, max 448.
// E5M2: bias 15, IEEE-style infinities and NaNs.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace qfx {

enum class Fp8Format { kE4M3, kE5M2 };

struct Fp8Value {
  uint8_t bits = 0;
  Fp8Format format = Fp8Format::kE4M3;

  friend bool operator==(const Fp8Value&, const Fp8Value&) = default;
};

inline constexpr int fp8_man_bits(Fp8Format f) { return f == Fp8Format::kE4M3 ? 3 : 2; }
inline constexpr int fp8_exp_bits(Fp8Format f) { return f == Fp8Format::kE4M3 ? 4 : 5; }
inline constexpr int fp8_bias(Fp8Format f) { return f == Fp8Format::kE4M3 ? 7 : 15; }
inline constexpr double fp8_max_finite(Fp8Format f) {
  return f == Fp8Format::kE4M3 ? 448.0 : 57344.0;
}

inline bool fp8_is_nan(Fp8Value v) {
  const unsigned mag = v.bits & 0x7Fu;
  if (v.format == Fp8Format::kE4M3) return mag == 0x7Fu;
  return (mag >> 2) == 0x1Fu && (mag & 3u) != 0;
}

inline bool fp8_is_inf(Fp8Value v) {
  return v.format == Fp8Format::kE5M2 && (v.bits & 0x7Fu) == 0x7Cu;
}

// Finite value = (-1)^negative * mantissa * 2^exponent, mantissa integral
// with the hidden bit included.
struct Fp8Parts {
  bool negative;
  int32_t mantissa;
  int exponent;
};

inline Fp8Parts fp8_unpack(Fp8Value v) {
  const int mb = fp8_man_bits(v.format);
  const int e = (v.bits & 0x7F) >> mb;
  const int m = v.bits & ((1 << mb) - 1);
  const bool neg = (v.bits & 0x80) != 0;
  if (e == 0) return {neg, m, 1 - fp8_bias(v.format) - mb};
  return {neg, m | (1 << mb), e - fp8_bias(v.format) - mb};
}

// Decodes by rebuilding an IEEE binary32 bit pattern.
inline double fp8_decode(Fp8Value v) {
  const uint32_t sign = static_cast<uint32_t>(v.bits & 0x80) << 24;
  if (fp8_is_nan(v)) return std::numeric_limits<double>::quiet_NaN();
  if (fp8_is_inf(v))
    return sign ? -std::numeric_limits<double>::infinity()
                : std::numeric_limits<double>::infinity();
  const int mb = fp8_man_bits(v.format);
  int e = (v.bits & 0x7F) >> mb;
  uint32_t m = v.bits & ((1u << mb) - 1);
  if (e == 0) {
    if (m == 0) return std::bit_cast<float>(sign);
    // Normalize the subnormal.
    e = 1;
    while (!(m & (1u << mb))) {
      m <<= 1;
      --e;
    }
    m &= (1u << mb) - 1;
  }
  const uint32_t e32 = static_cast<uint32_t>(e - fp8_bias(v.format) + 127);
  return std::bit_cast<float>(sign | (e32 << 23) | (m << (23 - mb)));
}

// Round to nearest even. Overflow: E4M3 saturates to +-448, E5M2 goes to inf.
inline Fp8Value fp8_encode(double x, Fp8Format f) {
  const uint8_t sign = std::signbit(x) ? 0x80 : 0x00;
  const bool e4 = f == Fp8Format::kE4M3;
  const uint8_t max_code = e4 ? 0x7E : 0x7B;
  if (std::isnan(x)) return {static_cast<uint8_t>(sign | 0x7F), f};
  if (std::isinf(x)) return {static_cast<uint8_t>(sign | (e4 ? max_code : 0x7C)), f};
  const double a = std::fabs(x);
  if (a == 0.0) return {sign, f};
  const int mb = fp8_man_bits(f);
  const int emin = 1 - fp8_bias(f);
  int e = std::max(std::ilogb(a), emin);
  double q = std::nearbyint(std::ldexp(a, mb - e));
  if (q >= std::ldexp(1.0, mb + 1)) {
    ++e;
    q /= 2;
  }
  if (std::ldexp(q, e - mb) > fp8_max_finite(f))
    return {static_cast<uint8_t>(sign | (e4 ? max_code : 0x7C)), f};
  const auto qi = static_cast<unsigned>(q);
  if (qi < (1u << mb)) return {static_cast<uint8_t>(sign | qi), f};
  const unsigned field = static_cast<unsigned>(e + fp8_bias(f));
  return {static_cast<uint8_t>(sign | (field << mb) | (qi - (1u << mb))), f};
}

inline bool parse_fp8_format(std::string_view s, Fp8Format& out) {
  if (s == "e4m3") out = Fp8Format::kE4M3;
  else if (s == "e5m2") out = Fp8Format::kE5M2;
  else return false;
  return true;
}

}  // namespace qfx

#endif  // QFX_FP8_HPP_
