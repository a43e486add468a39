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

#ifndef QFX_QTEN_HPP_
#define QFX_QTEN_HPP_

// QTEN tensor files, little-endian:
//   "QTEN" | version u16 | dtype u8 (0 fixed int32, 1 real f64) | rank u8 |
//   dims u32[rank] | fixed only: fmt_len u8, fmt chars, scale f64, zp i64 |
//   payload, row-major.

#include <type_traits>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <variant>

#include "qfx/tensor.hpp"

namespace qfx {

inline constexpr uint16_t kQtenVersion = 1;

enum class QtenDtype : uint8_t { kFixed = 0, kReal = 1 };

using AnyTensor = std::variant<FixedTensor, RealTensor>;

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  using U = std::make_unsigned_t<std::conditional_t<
      std::is_floating_point_v<T>,
      std::conditional_t<sizeof(T) == 8, int64_t, int32_t>, T>>;
  U u;
  std::memcpy(&u, &v, sizeof(T));
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  using U = std::make_unsigned_t<std::conditional_t<
      std::is_floating_point_v<T>,
      std::conditional_t<sizeof(T) == 8, int64_t, int32_t>, T>>;
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T)))
    fail(Errc::kParse, "QTEN: truncated input");
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(b[i]) << (8 * i);
  T v;
  std::memcpy(&v, &u, sizeof(T));
  return v;
}

inline void put_header(std::ostream& os, QtenDtype dt, const Shape& shape) {
  if (shape.size() > 255) fail(Errc::kInvalidArgument, "QTEN: rank > 255");
  os.write("QTEN", 4);
  put_le<uint16_t>(os, kQtenVersion);
  put_le<uint8_t>(os, static_cast<uint8_t>(dt));
  put_le<uint8_t>(os, static_cast<uint8_t>(shape.size()));
  for (auto d : shape) {
    if (d > UINT32_MAX) fail(Errc::kInvalidArgument, "QTEN: dimension too large");
    put_le<uint32_t>(os, static_cast<uint32_t>(d));
  }
}

}  // namespace detail

inline void write_qten(std::ostream& os, const FixedTensor& t) {
  t.validate();
  if (t.format.raw_max() > INT32_MAX)
    fail(Errc::kInvalidArgument, "QTEN: format " + t.format.str() +
                                     " does not fit int32 storage");
  detail::put_header(os, QtenDtype::kFixed, t.shape);
  const std::string f = t.format.str();
  detail::put_le<uint8_t>(os, static_cast<uint8_t>(f.size()));
  os.write(f.data(), static_cast<std::streamsize>(f.size()));
  detail::put_le<double>(os, t.params.scale);
  detail::put_le<int64_t>(os, t.params.zero_point);
  for (int64_t r : t.raw) detail::put_le<int32_t>(os, static_cast<int32_t>(r));
}

inline void write_qten(std::ostream& os, const RealTensor& t) {
  t.validate();
  detail::put_header(os, QtenDtype::kReal, t.shape);
  for (double v : t.values) detail::put_le<double>(os, v);
}

inline AnyTensor read_qten(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "QTEN", 4) != 0)
    fail(Errc::kParse, "QTEN: bad magic");
  const auto version = detail::get_le<uint16_t>(is);
  if (version != kQtenVersion)
    fail(Errc::kParse, "QTEN: unsupported version " + std::to_string(version));
  const auto dtype = detail::get_le<uint8_t>(is);
  const auto rank = detail::get_le<uint8_t>(is);
  Shape shape(rank);
  uint64_t count = 1;
  for (auto& d : shape) {
    d = detail::get_le<uint32_t>(is);
    count *= d;
    if (count > (uint64_t{1} << 32)) fail(Errc::kParse, "QTEN: tensor too large");
  }
  if (dtype == static_cast<uint8_t>(QtenDtype::kFixed)) {
    const auto len = detail::get_le<uint8_t>(is);
    std::string f(len, '\0');
    if (!is.read(f.data(), len)) fail(Errc::kParse, "QTEN: truncated format");
    QFormat fmt = QFormat::parse(f);
    QuantParams p;
    p.scale = detail::get_le<double>(is);
    p.zero_point = detail::get_le<int64_t>(is);
    std::vector<int64_t> raw(count);
    for (auto& r : raw) r = detail::get_le<int32_t>(is);
    try {
      return FixedTensor(std::move(shape), fmt, p, std::move(raw));
    } catch (const Error& e) {
      fail(Errc::kParse, std::string("QTEN: ") + e.what());
    }
  }
  if (dtype == static_cast<uint8_t>(QtenDtype::kReal)) {
    std::vector<double> v(count);
    for (auto& x : v) x = detail::get_le<double>(is);
    try {
      return RealTensor(std::move(shape), std::move(v));
    } catch (const Error& e) {
      fail(Errc::kParse, std::string("QTEN: ") + e.what());
    }
  }
  fail(Errc::kParse, "QTEN: unknown dtype " + std::to_string(dtype));
}

template <class T>
void save_qten(const std::string& path, const T& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::kIo, "cannot open " + path + " for writing");
  write_qten(os, t);
  if (!os) fail(Errc::kIo, "write failed: " + path);
}

inline AnyTensor load_qten(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::kIo, "cannot open " + path);
  return read_qten(is);
}

}  // namespace qfx

#endif  // QFX_QTEN_HPP_
