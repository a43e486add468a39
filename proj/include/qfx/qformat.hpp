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

#ifndef QFX_QFORMAT_HPP_
#define QFX_QFORMAT_HPP_

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "qfx/error.hpp"

namespace qfx {

// Fixed-point layout. Real value of raw r is r * 2^-frac_bits.
struct QFormat {
  bool is_signed = true;
  int int_bits = 0;
  int frac_bits = 0;

  constexpr int width() const { return (is_signed ? 1 : 0) + int_bits + frac_bits; }
  constexpr int magnitude_bits() const { return int_bits + frac_bits; }
  constexpr int64_t raw_min() const {
    return is_signed ? -(int64_t{1} << magnitude_bits()) : 0;
  }
  constexpr int64_t raw_max() const { return (int64_t{1} << magnitude_bits()) - 1; }
  double lsb() const;
  double real_min() const { return static_cast<double>(raw_min()) * lsb(); }
  double real_max() const { return static_cast<double>(raw_max()) * lsb(); }
  constexpr bool valid() const {
    return int_bits >= 0 && frac_bits >= 0 && width() >= 1 && width() <= 32;
  }

  std::string str() const;
  static QFormat parse(std::string_view text);

  friend constexpr bool operator==(const QFormat&, const QFormat&) = default;
};

constexpr QFormat S(int i, int f = 0) { return QFormat{true, i, f}; }
constexpr QFormat U(int i, int f = 0) { return QFormat{false, i, f}; }

inline double QFormat::lsb() const {
  return 1.0 / static_cast<double>(int64_t{1} << frac_bits);
}

inline std::string QFormat::str() const {
  std::string s(1, is_signed ? 'S' : 'U');
  s += std::to_string(int_bits);
  if (frac_bits != 0) s += "." + std::to_string(frac_bits);
  return s;
}

// Grammar: [SU]<int_bits>[.<frac_bits>], case-sensitive.
inline QFormat QFormat::parse(std::string_view text) {
  auto bad = [&](const char* why) -> QFormat {
    fail(Errc::kInvalidFormat,
         "bad Q-format '" + std::string(text) + "': " + why);
  };
  if (text.size() < 2 || (text[0] != 'S' && text[0] != 'U'))
    return bad("expected S or U prefix");
  QFormat f;
  f.is_signed = text[0] == 'S';
  auto num = [&](std::string_view part, int& out) {
    if (part.empty() || part.size() > 2) return false;
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc() && p == part.data() + part.size();
  };
  std::string_view body = text.substr(1);
  const auto dot = body.find('.');
  if (!num(body.substr(0, dot), f.int_bits)) return bad("integer bits");
  if (dot != std::string_view::npos && !num(body.substr(dot + 1), f.frac_bits))
    return bad("fraction bits");
  if (!f.valid()) return bad("width must be in [1, 32]");
  return f;
}

inline void require_valid(const QFormat& f, const char* what) {
  if (!f.valid())
    fail(Errc::kInvalidFormat, std::string(what) + ": invalid format " + f.str());
}

inline int64_t saturate(int64_t v, const QFormat& f) {
  if (v < f.raw_min()) return f.raw_min();
  if (v > f.raw_max()) return f.raw_max();
  return v;
}

inline bool in_range(int64_t v, const QFormat& f) {
  return v >= f.raw_min() && v <= f.raw_max();
}

// v * 2^-s, round to nearest, ties to even. Negative s shifts left.
inline int64_t round_shift(int64_t v, int s) {
  if (s <= 0) return static_cast<int64_t>(static_cast<uint64_t>(v) << -s);
  if (s >= 64) return 0;
  const uint64_t mask = (uint64_t{1} << s) - 1;
  const uint64_t rem = static_cast<uint64_t>(v) & mask;
  int64_t q = v >> s;
  const uint64_t half = uint64_t{1} << (s - 1);
  if (rem > half || (rem == half && (q & 1))) ++q;
  return q;
}

// num / den rounded to nearest, ties to even. den > 0.
template <class T>
T round_div(T num, T den) {
  T q = num / den;
  T r = num % den;
  if (r < 0) {
    --q;
    r += den;
  }
  const T rest = den - r;
  if (r > rest || (r == rest && (q % 2 != 0))) ++q;
  return q;
}

// Rescale a value held with from_frac fractional bits into `to`.
inline int64_t rescale(int64_t v, int from_frac, const QFormat& to) {
  const int s = from_frac - to.frac_bits;
  if (s < 0) {
    // Left shift; saturate before it can overflow.
    if (v == 0) return 0;
    const int64_t lim = s <= -62 ? 1 : int64_t{1} << (62 + s);
    if (v >= lim) return to.raw_max();
    if (v <= -lim) return to.raw_min();
  }
  return saturate(round_shift(v, s), to);
}

}  // namespace qfx

#endif  // QFX_QFORMAT_HPP_
