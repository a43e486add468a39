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

#ifndef QFX_REORG_HPP_
#define QFX_REORG_HPP_

// Data reorganization: pure index remaps over FixedTensor or RealTensor.

#include <cstddef>
#include <numeric>
#include <string>
#include <type_traits>
#include <vector>

#include "qfx/tensor.hpp"

namespace qfx {

namespace detail {

inline std::vector<int64_t>& data(FixedTensor& t) { return t.raw; }
inline const std::vector<int64_t>& data(const FixedTensor& t) { return t.raw; }
inline std::vector<double>& data(RealTensor& t) { return t.values; }
inline const std::vector<double>& data(const RealTensor& t) { return t.values; }

inline std::vector<std::size_t> strides(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

template <class T>
T like(const T& src, Shape shape) {
  T out = src;
  out.shape = std::move(shape);
  return out;
}

inline void check_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size())
    fail(Errc::kShapeMismatch, std::string(op) + ": axis " + std::to_string(axis) +
                                   " out of range for shape " + shape_str(s));
}

}  // namespace detail

template <class T>
T reshape(const T& x, Shape shape) {
  if (element_count(shape) != x.size())
    fail(Errc::kShapeMismatch, "reshape: " + shape_str(x.shape) + " -> " + shape_str(shape));
  return detail::like(x, std::move(shape));
}

// out.shape[i] = x.shape[axes[i]]
template <class T>
T permute(const T& x, const std::vector<std::size_t>& axes) {
  const std::size_t rank = x.shape.size();
  std::vector<bool> seen(rank, false);
  if (axes.size() != rank)
    fail(Errc::kShapeMismatch, "permute: axis list does not match rank");
  for (auto a : axes) {
    if (a >= rank || seen[a]) fail(Errc::kShapeMismatch, "permute: invalid axis list");
    seen[a] = true;
  }
  Shape os(rank);
  for (std::size_t i = 0; i < rank; ++i) os[i] = x.shape[axes[i]];
  T out = detail::like(x, os);
  const auto in_st = detail::strides(x.shape);
  std::vector<std::size_t> idx(rank, 0);
  auto& dst = detail::data(out);
  const auto& src = detail::data(x);
  for (std::size_t flat = 0; flat < dst.size(); ++flat) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < rank; ++i) off += idx[i] * in_st[axes[i]];
    dst[flat] = src[off];
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < os[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

// Swaps the last two axes.
template <class T>
T transpose(const T& x) {
  if (x.shape.size() < 2) fail(Errc::kShapeMismatch, "transpose: rank < 2");
  std::vector<std::size_t> axes(x.shape.size());
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  std::swap(axes[axes.size() - 1], axes[axes.size() - 2]);
  return permute(x, axes);
}

template <class T>
std::vector<T> split(const T& x, std::size_t axis, const std::vector<std::size_t>& sizes) {
  detail::check_axis(x.shape, axis, "split");
  if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) != x.shape[axis])
    fail(Errc::kShapeMismatch, "split: sizes do not sum to dimension " +
                                   std::to_string(x.shape[axis]));
  const auto st = detail::strides(x.shape);
  const std::size_t outer = x.size() / (x.shape[axis] * st[axis]);
  std::vector<T> parts;
  std::size_t start = 0;
  for (auto sz : sizes) {
    Shape s = x.shape;
    s[axis] = sz;
    T part = detail::like(x, s);
    auto& dst = detail::data(part);
    dst.clear();
    for (std::size_t o = 0; o < outer; ++o) {
      const auto* base = detail::data(x).data() + o * x.shape[axis] * st[axis] + start * st[axis];
      dst.insert(dst.end(), base, base + sz * st[axis]);
    }
    parts.push_back(std::move(part));
    start += sz;
  }
  return parts;
}

template <class T>
T concatenate(const std::vector<T>& parts, std::size_t axis) {
  if (parts.empty()) fail(Errc::kShapeMismatch, "concatenate: no inputs");
  const Shape& s0 = parts[0].shape;
  detail::check_axis(s0, axis, "concatenate");
  Shape os = s0;
  os[axis] = 0;
  for (const auto& p : parts) {
    if (p.shape.size() != s0.size())
      fail(Errc::kShapeMismatch, "concatenate: rank mismatch");
    for (std::size_t i = 0; i < s0.size(); ++i)
      if (i != axis && p.shape[i] != s0[i])
        fail(Errc::kShapeMismatch, "concatenate: shapes " + shape_str(s0) + " and " +
                                       shape_str(p.shape) + " differ off-axis");
    if constexpr (std::is_same_v<T, FixedTensor>) {
      if (p.format != parts[0].format || !(p.params == parts[0].params))
        fail(Errc::kInvalidFormat, "concatenate: formats or params differ");
    }
    os[axis] += p.shape[axis];
  }
  T out = detail::like(parts[0], os);
  auto& dst = detail::data(out);
  dst.clear();
  dst.reserve(element_count(os));
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t o = 0; o < outer; ++o)
    for (const auto& p : parts) {
      const std::size_t blk = p.shape[axis] * inner;
      const auto* base = detail::data(p).data() + o * blk;
      dst.insert(dst.end(), base, base + blk);
    }
  return out;
}

// [H, W, C] -> [(H/ws)*(W/ws), ws*ws, C]
template <class T>
T window_partition(const T& x, std::size_t ws) {
  if (x.shape.size() != 3 || ws == 0 || x.shape[0] % ws || x.shape[1] % ws)
    fail(Errc::kShapeMismatch, "window_partition: shape " + shape_str(x.shape) +
                                   " not divisible into " + std::to_string(ws) +
                                   "x" + std::to_string(ws) + " windows");
  const std::size_t h = x.shape[0], w = x.shape[1], c = x.shape[2];
  // [H/ws, ws, W/ws, ws, C] -> [H/ws, W/ws, ws, ws, C]
  T t = reshape(x, {h / ws, ws, w / ws, ws, c});
  t = permute(t, {0, 2, 1, 3, 4});
  return reshape(t, {(h / ws) * (w / ws), ws * ws, c});
}

// Inverse of window_partition.
template <class T>
T window_reverse(const T& x, std::size_t h, std::size_t w) {
  if (x.shape.size() != 3)
    fail(Errc::kShapeMismatch, "window_reverse: expected rank 3");
  const std::size_t c = x.shape[2];
  std::size_t ws = 0;
  while ((ws + 1) * (ws + 1) <= x.shape[1]) ++ws;
  if (ws == 0 || ws * ws != x.shape[1] || h % ws || w % ws ||
      x.shape[0] != (h / ws) * (w / ws))
    fail(Errc::kShapeMismatch, "window_reverse: shape " + shape_str(x.shape) +
                                   " does not tile " + std::to_string(h) + "x" +
                                   std::to_string(w));
  T t = reshape(x, {h / ws, w / ws, ws, ws, c});
  t = permute(t, {0, 2, 1, 3, 4});
  return reshape(t, {h, w, c});
}

}  // namespace qfx

#endif  // QFX_REORG_HPP_
