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

#ifndef QFX_TENSOR_HPP_
#define QFX_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qfx/quant.hpp"

namespace qfx {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

struct RealTensor {
  Shape shape;
  std::vector<double> values;

  RealTensor() = default;
  RealTensor(Shape s, std::vector<double> v)
      : shape(std::move(s)), values(std::move(v)) {
    validate();
  }
  explicit RealTensor(Shape s)
      : shape(std::move(s)), values(element_count(shape), 0.0) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  void validate() const {
    if (values.size() != element_count(shape))
      fail(Errc::kShapeMismatch, "real tensor: element count " +
                                     std::to_string(values.size()) +
                                     " does not match shape " + shape_str(shape));
    for (double v : values)
      if (!std::isfinite(v))
        fail(Errc::kInvalidArgument, "real tensor: non-finite value");
  }
};

// Raw values are held as int64 in memory; the file format stores int32.
struct FixedTensor {
  Shape shape;
  QFormat format;
  QuantParams params;
  std::vector<int64_t> raw;

  FixedTensor() = default;
  FixedTensor(Shape s, QFormat f, QuantParams p, std::vector<int64_t> r)
      : shape(std::move(s)), format(f), params(p), raw(std::move(r)) {
    validate();
  }
  FixedTensor(Shape s, QFormat f)
      : shape(std::move(s)), format(f), params(default_params(f)),
        raw(element_count(shape), 0) {}
  FixedTensor(Shape s, QFormat f, QuantParams p)
      : shape(std::move(s)), format(f), params(p), raw(element_count(shape), 0) {}

  std::size_t size() const { return raw.size(); }
  int64_t& operator[](std::size_t i) { return raw[i]; }
  int64_t operator[](std::size_t i) const { return raw[i]; }
  double real(std::size_t i) const { return dequantize(raw[i], params); }

  void validate() const {
    require_valid(format, "fixed tensor");
    require_valid(params, "fixed tensor");
    if (raw.size() != element_count(shape))
      fail(Errc::kShapeMismatch, "fixed tensor: element count " +
                                     std::to_string(raw.size()) +
                                     " does not match shape " + shape_str(shape));
    for (int64_t r : raw)
      if (!in_range(r, format))
        fail(Errc::kInvalidArgument, "fixed tensor: raw value " +
                                         std::to_string(r) + " outside " +
                                         format.str());
  }
};

inline FixedTensor quantize(const RealTensor& x, const QFormat& f,
                            const QuantParams& p,
                            std::size_t* saturations = nullptr) {
  require_valid(f, "quantize");
  require_valid(p, "quantize");
  FixedTensor out(x.shape, f, p);
  std::size_t sat = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.raw[i] = quantize(x.values[i], f, p);
    const double back = x.values[i] / p.scale + static_cast<double>(p.zero_point);
    if (back > static_cast<double>(f.raw_max()) + 0.5 ||
        back < static_cast<double>(f.raw_min()) - 0.5)
      ++sat;
  }
  if (saturations) *saturations = sat;
  return out;
}

inline FixedTensor quantize(const RealTensor& x, const QFormat& f) {
  return quantize(x, f, default_params(f));
}

inline RealTensor dequantize(const FixedTensor& x) {
  RealTensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x.real(i);
  return out;
}

}  // namespace qfx

#endif  // QFX_TENSOR_HPP_
