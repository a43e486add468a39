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

#ifndef QFX_POW2_HPP_
#define QFX_POW2_HPP_

#include <array>
#include <cstdint>

#include "qfx/qformat.hpp"

namespace qfx {

// 2^(i/64) in U1.15 for i in [0, 64]; entry 64 is the carry into the next
// octave.
inline constexpr std::array<int64_t, 65> kPow2Table = {
    32768, 33125, 33486, 33850, 34219, 34591, 34968, 35349, 35734, 36123,
    36516, 36914, 37316, 37722, 38133, 38548, 38968, 39392, 39821, 40255,
    40693, 41136, 41584, 42037, 42495, 42958, 43425, 43898, 44376, 44859,
    45348, 45842, 46341, 46846, 47356, 47871, 48393, 48920, 49452, 49991,
    50535, 51085, 51642, 52204, 52773, 53347, 53928, 54515, 55109, 55709,
    56316, 56929, 57549, 58176, 58809, 59449, 60097, 60751, 61413, 62081,
    62757, 63441, 64132, 64830, 65536};

inline constexpr int kPow2TableBits = 6;
inline constexpr int kPow2MantissaFrac = 15;

// 2^(x * 2^-frac) ~= mantissa * 2^(octave - 15).
struct Pow2Parts {
  int64_t mantissa;
  int64_t octave;
};

inline Pow2Parts pow2_parts(int64_t x, int frac_bits) {
  const int64_t octave = x >> frac_bits;
  const int64_t r = x - octave * (int64_t{1} << frac_bits);
  const int64_t idx = frac_bits >= kPow2TableBits
                          ? round_shift(r, frac_bits - kPow2TableBits)
                          : r << (kPow2TableBits - frac_bits);
  return {kPow2Table[static_cast<std::size_t>(idx)], octave};
}

// Base-2 exponential of a non-positive fixed-point value. Positive inputs
// saturate to the output maximum. out_fmt must be unsigned.
inline int64_t pow2_fixed(int64_t x, const QFormat& in_fmt, const QFormat& out_fmt) {
  if (out_fmt.is_signed)
    fail(Errc::kInvalidFormat, "pow2_fixed: output format must be unsigned");
  if (x > 0) return out_fmt.raw_max();
  const auto [m, octave] = pow2_parts(x, in_fmt.frac_bits);
  const int64_t s = kPow2MantissaFrac - out_fmt.frac_bits - octave;
  if (s >= 64) return 0;
  return rescale(m, static_cast<int>(s) + out_fmt.frac_bits, out_fmt);
}

}  // namespace qfx

#endif  // QFX_POW2_HPP_
