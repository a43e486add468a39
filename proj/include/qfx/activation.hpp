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

#ifndef QFX_ACTIVATION_HPP_
#define QFX_ACTIVATION_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "qfx/mac_counter.hpp"
#include "qfx/pow2.hpp"
#include "qfx/tensor.hpp"

namespace qfx {

enum class ActivationKind { kGelu, kRelu, kLeakyRelu, kElu, kSelu, kSigmoid, kTanh };

inline std::string_view to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::kGelu: return "gelu";
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kLeakyRelu: return "leaky_relu";
    case ActivationKind::kElu: return "elu";
    case ActivationKind::kSelu: return "selu";
    case ActivationKind::kSigmoid: return "sigmoid";
    case ActivationKind::kTanh: return "tanh";
  }
  return "?";
}

inline bool parse_activation(std::string_view s, ActivationKind& out) {
  for (auto k : {ActivationKind::kGelu, ActivationKind::kRelu,
                 ActivationKind::kLeakyRelu, ActivationKind::kElu,
                 ActivationKind::kSelu, ActivationKind::kSigmoid,
                 ActivationKind::kTanh}) {
    if (to_string(k) == s) {
      out = k;
      return true;
    }
  }
  return false;
}

struct ActivationConfig {
  ActivationKind kind = ActivationKind::kGelu;
  QFormat in_fmt = S(6, 9);
  QFormat out_fmt = S(5, 10);
  double leaky_alpha = 0.01;
  double elu_alpha = 1.0;
  double selu_alpha = 1.6733;
  double selu_lambda = 1.0507;

  void validate() const {
    require_valid(in_fmt, "activation in_fmt");
    require_valid(out_fmt, "activation out_fmt");
    if (!(leaky_alpha > 0 && elu_alpha > 0 && selu_alpha > 0 && selu_lambda > 0))
      fail(Errc::kInvalidArgument, "activation constants must be positive");
    if (leaky_alpha > 64 || elu_alpha > 64 || selu_alpha * selu_lambda > 64 ||
        selu_lambda > 64)
      fail(Errc::kInvalidArgument, "activation constants must be at most 64");
  }
};

// GELU uses the sigmoid approximant x * sigmoid(1.702 x).
inline double activation_ref(double x, const ActivationConfig& cfg) {
  auto sigmoid = [](double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  };
  switch (cfg.kind) {
    case ActivationKind::kGelu: return x * sigmoid(1.702 * x);
    case ActivationKind::kRelu: return x > 0 ? x : 0.0;
    case ActivationKind::kLeakyRelu: return x >= 0 ? x : cfg.leaky_alpha * x;
    case ActivationKind::kElu: return x > 0 ? x : cfg.elu_alpha * std::expm1(x);
    case ActivationKind::kSelu:
      return cfg.selu_lambda * (x > 0 ? x : cfg.selu_alpha * std::expm1(x));
    case ActivationKind::kSigmoid: return sigmoid(x);
    case ActivationKind::kTanh: return std::tanh(x);
  }
  return 0.0;
}

namespace detail {

inline constexpr int kConstFrac = 24;  // activation constants
inline constexpr int kExpArgFrac = 16; // base-2 exponent operands
inline constexpr int kExpFrac = 30;    // exponentials, U1.30

inline int64_t const_q(double c) {
  return static_cast<int64_t>(std::nearbyint(c * static_cast<double>(int64_t{1} << kConstFrac)));
}

// 2^(z * 2^-frac) for z <= 0, in U1.30.
inline int64_t exp2_u30(int64_t z, int frac) {
  return pow2_fixed(z, QFormat{true, 0, frac}, U(1, kExpFrac));
}

// 1 / (1 + 2^-z) in U1.30 via the stabilized rational form
// e_i / (e_i + e_max), m = max(z, 0).
inline int64_t sigmoid2_u30(int64_t z, int frac) {
  const int64_t m = z > 0 ? z : 0;
  const int64_t ei = exp2_u30(z - m, frac);
  const int64_t emax = exp2_u30(-m, frac);
  return round_div<int64_t>(ei << kExpFrac, ei + emax);
}

// x * log2(e) moved from frac bits to kExpArgFrac.
inline int64_t times_log2e(int64_t x, int frac) {
  static const int64_t kLog2e = const_q(std::numbers::log2e);
  return round_shift(x * kLog2e, frac + kConstFrac - kExpArgFrac);
}

}  // namespace detail

// Raw in cfg.in_fmt to raw in cfg.out_fmt. Inputs are Q-format values
// (zero point 0). `macs` receives the multiplies performed, if given.
inline int64_t activation_fixed(int64_t x, const ActivationConfig& cfg,
                                uint64_t* macs = nullptr) {
  using namespace detail;
  uint64_t dummy = 0;
  uint64_t& n = macs ? *macs : dummy;
  const int f = cfg.in_fmt.frac_bits;
  const QFormat& out = cfg.out_fmt;
  switch (cfg.kind) {
    case ActivationKind::kGelu: {
      // 2.4375 x ~= 1.702 * log2(e) * x
      const int64_t xp = (x << 1) + (x >> 1) - (x >> 4);
      ++n;
      return rescale(x * sigmoid2_u30(xp, f), f + kExpFrac, out);
    }
    case ActivationKind::kRelu:
      return rescale(x > 0 ? x : 0, f, out);
    case ActivationKind::kLeakyRelu:
      if (x >= 0) return rescale(x, f, out);
      ++n;
      return rescale(x * const_q(cfg.leaky_alpha), f + kConstFrac, out);
    case ActivationKind::kElu:
    case ActivationKind::kSelu: {
      const bool selu = cfg.kind == ActivationKind::kSelu;
      if (x > 0) {
        if (!selu) return rescale(x, f, out);
        ++n;
        return rescale(x * const_q(cfg.selu_lambda), f + kConstFrac, out);
      }
      n += 2;
      const double a = selu ? cfg.selu_alpha * cfg.selu_lambda : cfg.elu_alpha;
      const int64_t em1 = exp2_u30(times_log2e(x, f), kExpArgFrac) -
                          (int64_t{1} << kExpFrac);
      return rescale(const_q(a) * em1, kConstFrac + kExpFrac, out);
    }
    case ActivationKind::kSigmoid:
      ++n;
      return rescale(sigmoid2_u30(times_log2e(x, f), kExpArgFrac), kExpFrac, out);
    case ActivationKind::kTanh: {
      ++n;
      const int64_t s = sigmoid2_u30(times_log2e(2 * x, f), kExpArgFrac);
      return rescale(2 * s - (int64_t{1} << kExpFrac), kExpFrac, out);
    }
  }
  return 0;
}

inline FixedTensor activation_fixed(const FixedTensor& x, const ActivationConfig& cfg) {
  cfg.validate();
  if (x.format != cfg.in_fmt)
    fail(Errc::kInvalidFormat, "activation: tensor format " + x.format.str() +
                                   " does not match in_fmt " + cfg.in_fmt.str());
  FixedTensor out(x.shape, cfg.out_fmt);
  uint64_t macs = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    out.raw[i] = activation_fixed(x.raw[i], cfg, &macs);
  publish_macs(macs);
  return out;
}

inline RealTensor activation_ref(const RealTensor& x, const ActivationConfig& cfg) {
  RealTensor out(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i)
    out.values[i] = activation_ref(x.values[i], cfg);
  return out;
}

}  // namespace qfx

#endif  // QFX_ACTIVATION_HPP_
