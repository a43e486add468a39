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

#ifndef QFX_GATHER_HPP_
#define QFX_GATHER_HPP_

// Deformable gather: bilinear sampling of an H x W x C feature map at
// point + offset for every (query, head). Coordinates are (x, y) in pixels
// and clamp to [0, W-1] x [0, H-1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qfx/mac_counter.hpp"
#include "qfx/tensor.hpp"

namespace qfx {

struct GatherSpec {
  std::size_t queries = 0;
  std::size_t heads = 1;
  std::vector<double> points;   // queries x 2
  std::vector<double> offsets;  // queries x heads x 2
  // Head h samples only channels [h*C/heads, (h+1)*C/heads).
  bool head_split = false;
};

namespace detail {

struct Tap {
  std::size_t x0, x1, y0, y1;
  double fx, fy;
};

inline Tap bilinear_tap(double x, double y, std::size_t h, std::size_t w) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  Tap t;
  t.x0 = static_cast<std::size_t>(std::floor(x));
  t.y0 = static_cast<std::size_t>(std::floor(y));
  t.x1 = std::min(t.x0 + 1, w - 1);
  t.y1 = std::min(t.y0 + 1, h - 1);
  t.fx = x - static_cast<double>(t.x0);
  t.fy = y - static_cast<double>(t.y0);
  return t;
}

inline std::size_t gather_channels(const Shape& map, const GatherSpec& spec) {
  if (map.size() != 3 || map[0] == 0 || map[1] == 0)
    fail(Errc::kShapeMismatch, "gather: feature map must be H x W x C, got " +
                                   shape_str(map));
  if (spec.heads == 0) fail(Errc::kInvalidArgument, "gather: heads must be >= 1");
  if (spec.points.size() != spec.queries * 2 ||
      spec.offsets.size() != spec.queries * spec.heads * 2)
    fail(Errc::kShapeMismatch, "gather: points/offsets size mismatch");
  for (double v : spec.points)
    if (!std::isfinite(v)) fail(Errc::kInvalidArgument, "gather: non-finite point");
  for (double v : spec.offsets)
    if (!std::isfinite(v)) fail(Errc::kInvalidArgument, "gather: non-finite offset");
  if (!spec.head_split) return map[2];
  if (map[2] % spec.heads)
    fail(Errc::kShapeMismatch, "gather: channels not divisible by heads");
  return map[2] / spec.heads;
}

template <class Sample>
void gather_loop(const Shape& map, const GatherSpec& spec, std::size_t cout, Sample&& sample) {
  for (std::size_t q = 0; q < spec.queries; ++q)
    for (std::size_t h = 0; h < spec.heads; ++h) {
      const double x = spec.points[2 * q] + spec.offsets[(q * spec.heads + h) * 2];
      const double y = spec.points[2 * q + 1] + spec.offsets[(q * spec.heads + h) * 2 + 1];
      const Tap t = bilinear_tap(x, y, map[0], map[1]);
      const std::size_t c0 = spec.head_split ? h * cout : 0;
      sample(t, (q * spec.heads + h) * cout, c0);
    }
}

}  // namespace detail

// Output queries x heads x C (or C/heads with head_split).
inline RealTensor deformable_gather(const RealTensor& map, const GatherSpec& spec) {
  const std::size_t cout = detail::gather_channels(map.shape, spec);
  const std::size_t w = map.shape[1], c = map.shape[2];
  RealTensor out({spec.queries, spec.heads, cout});
  detail::gather_loop(map.shape, spec, cout, [&](const detail::Tap& t, std::size_t o, std::size_t c0) {
    const double w00 = (1 - t.fx) * (1 - t.fy), w01 = t.fx * (1 - t.fy);
    const double w10 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
    const double* f00 = map.values.data() + (t.y0 * w + t.x0) * c + c0;
    const double* f01 = map.values.data() + (t.y0 * w + t.x1) * c + c0;
    const double* f10 = map.values.data() + (t.y1 * w + t.x0) * c + c0;
    const double* f11 = map.values.data() + (t.y1 * w + t.x1) * c + c0;
    for (std::size_t k = 0; k < cout; ++k)
      out.values[o + k] = w00 * f00[k] + w01 * f01[k] + w10 * f10[k] + w11 * f11[k];
  });
  return out;
}

// Fixed path, counted in mac_counter(). Interpolation weights are U1.15, so
// a product of two carries 30 fraction bits; the result keeps the map's
// format and params.
inline FixedTensor deformable_gather(const FixedTensor& map, const GatherSpec& spec) {
  const std::size_t cout = detail::gather_channels(map.shape, spec);
  const std::size_t w = map.shape[1], c = map.shape[2];
  FixedTensor out({spec.queries, spec.heads, cout}, map.format, map.params);
  constexpr int kFrac = 15;
  constexpr int64_t kOne = int64_t{1} << kFrac;
  uint64_t macs = 0;
  detail::gather_loop(map.shape, spec, cout, [&](const detail::Tap& t, std::size_t o, std::size_t c0) {
    const int64_t wx1 = static_cast<int64_t>(std::nearbyint(t.fx * kOne)), wx0 = kOne - wx1;
    const int64_t wy1 = static_cast<int64_t>(std::nearbyint(t.fy * kOne)), wy0 = kOne - wy1;
    const int64_t w00 = wx0 * wy0, w01 = wx1 * wy0, w10 = wx0 * wy1, w11 = wx1 * wy1;
    const int64_t* f00 = map.raw.data() + (t.y0 * w + t.x0) * c + c0;
    const int64_t* f01 = map.raw.data() + (t.y0 * w + t.x1) * c + c0;
    const int64_t* f10 = map.raw.data() + (t.y1 * w + t.x0) * c + c0;
    const int64_t* f11 = map.raw.data() + (t.y1 * w + t.x1) * c + c0;
    for (std::size_t k = 0; k < cout; ++k, macs += 4) {
      const int64_t acc = w00 * f00[k] + w01 * f01[k] + w10 * f10[k] + w11 * f11[k];
      out.raw[o + k] = saturate(round_shift(acc, 2 * kFrac), map.format);
    }
  });
  publish_macs(macs);
  return out;
}

}  // namespace qfx

#endif  // QFX_GATHER_HPP_
