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

#ifndef QFX_DETAIL_WIDE_UINT_HPP_
#define QFX_DETAIL_WIDE_UINT_HPP_

#include <array>
#include <cstddef>
#include <cstdint>

namespace qfx::detail {

__extension__ using int128 = __int128;
__extension__ using uint128 = unsigned __int128;

// Small fixed-width unsigned integer, little-endian 64-bit limbs.
template <std::size_t Limbs>
class WideUint {
 public:
  static constexpr int kBits = static_cast<int>(Limbs * 64);

  bool is_zero() const {
    for (auto l : limb_)
      if (l) return false;
    return true;
  }

  // += 2^k
  void add_pow2(int k) {
    std::size_t i = static_cast<std::size_t>(k / 64);
    uint64_t add = uint64_t{1} << (k % 64);
    for (; i < Limbs && add; ++i) {
      limb_[i] += add;
      add = limb_[i] < add ? 1 : 0;
    }
  }

  WideUint& operator+=(const WideUint& o) {
    uint64_t carry = 0;
    for (std::size_t i = 0; i < Limbs; ++i) {
      const uint128 s =
          static_cast<uint128>(limb_[i]) + o.limb_[i] + carry;
      limb_[i] = static_cast<uint64_t>(s);
      carry = static_cast<uint64_t>(s >> 64);
    }
    return *this;
  }

  // += o * m
  void add_mul(const WideUint& o, uint64_t m) {
    uint64_t carry = 0;
    for (std::size_t i = 0; i < Limbs; ++i) {
      const uint128 s = static_cast<uint128>(o.limb_[i]) * m +
                                  limb_[i] + carry;
      limb_[i] = static_cast<uint64_t>(s);
      carry = static_cast<uint64_t>(s >> 64);
    }
  }

  WideUint shr(int n) const {
    WideUint out;
    if (n >= kBits) return out;
    const std::size_t w = static_cast<std::size_t>(n / 64);
    const int b = n % 64;
    for (std::size_t i = 0; i + w < Limbs; ++i) {
      uint64_t v = limb_[i + w] >> b;
      if (b && i + w + 1 < Limbs) v |= limb_[i + w + 1] << (64 - b);
      out.limb_[i] = v;
    }
    return out;
  }

  bool bit(int k) const {
    return (limb_[static_cast<std::size_t>(k / 64)] >> (k % 64)) & 1;
  }

  bool any_below(int k) const {
    const std::size_t w = static_cast<std::size_t>(k / 64);
    for (std::size_t i = 0; i < w; ++i)
      if (limb_[i]) return true;
    const int b = k % 64;
    return b && (limb_[w] & ((uint64_t{1} << b) - 1));
  }

  // value * 2^-s rounded to nearest, ties to even. The result must fit 64 bits.
  uint64_t round_shift(int s) const {
    if (s <= 0) return limb_[0] << -s;
    const WideUint q = shr(s);
    uint64_t r = q.limb_[0];
    const bool half = bit(s - 1);
    const bool sticky = any_below(s - 1);
    if (half && (sticky || (r & 1))) ++r;
    return r;
  }

  uint64_t low() const { return limb_[0]; }

 private:
  std::array<uint64_t, Limbs> limb_{};
};

}  // namespace qfx::detail

#endif  // QFX_DETAIL_WIDE_UINT_HPP_
