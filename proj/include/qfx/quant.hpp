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

#ifndef QFX_QUANT_HPP_
#define QFX_QUANT_HPP_

#include <cmath>
#include <cstdint>

#include "qfx/qformat.hpp"

namespace qfx {

struct QuantParams {
  double scale = 1.0;
  int64_t zero_point = 0;

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

// Scale 2^-frac with zero point 0: Q-format and affine arithmetic coincide.
inline QuantParams default_params(const QFormat& f) { return {f.lsb(), 0}; }

inline void require_valid(const QuantParams& p, const char* what) {
  if (!(p.scale > 0.0) || !std::isfinite(p.scale))
    fail(Errc::kInvalidArgument, std::string(what) + ": scale must be positive");
}

// round(x / scale + zp), ties to even, saturated. NaN maps to the zero point.
inline int64_t quantize(double x, const QFormat& f, const QuantParams& p) {
  const double v = x / p.scale + static_cast<double>(p.zero_point);
  if (std::isnan(v)) return saturate(p.zero_point, f);
  if (v >= static_cast<double>(f.raw_max())) return f.raw_max();
  if (v <= static_cast<double>(f.raw_min())) return f.raw_min();
  return saturate(static_cast<int64_t>(std::nearbyint(v)), f);
}

inline int64_t quantize(double x, const QFormat& f) {
  return quantize(x, f, default_params(f));
}

inline double dequantize(int64_t r, const QuantParams& p) {
  return static_cast<double>(r - p.zero_point) * p.scale;
}

inline double dequantize(int64_t r, const QFormat& f) {
  return static_cast<double>(r) * f.lsb();
}

// Shift by the fractional-bit difference (RNE on right shifts), then saturate.
inline int64_t requantize(int64_t r, const QFormat& from, const QFormat& to) {
  return rescale(r, from.frac_bits, to);
}

// Two's complement negation; the most negative value maps to the maximum.
inline int64_t saturating_negate(int64_t r, const QFormat& f) {
  return saturate(-r, f);
}

}  // namespace qfx

#endif  // QFX_QUANT_HPP_
