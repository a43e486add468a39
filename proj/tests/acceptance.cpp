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


// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qfx/qfx.hpp"

namespace {

using namespace qfx;

// Pinned tolerances.
constexpr double kSoftmax16MeanMax = 1.0;
constexpr double kSoftmax16MaxMax = 3.0;
constexpr double kSoftmax8InLo = 2.0, kSoftmax8InHi = 9.0;
constexpr double kSoftmax8OutMin = 50.0;
constexpr double kSoftmaxSumTol = 0.01;
constexpr double kLayerNormMeanMax = 1.5;
constexpr double kLayerNormLocationMin = 0.90;
constexpr double kGelu16MeanMax = 1.5;
constexpr double kGelu8InLo = 3.0, kGelu8InHi = 9.0;
constexpr double kGelu8OutMin = 15.0;
constexpr double kMatmulLsbTol = 1.0;
constexpr double kMatmulShareMin = 0.80;
constexpr double kGatherTol = 1e-12;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int digits = 4) { return format_fixed(v, digits); }

ErrorReport sweep_one(const std::string& op, const char* pair, unsigned threads = 0) {
  SweepSpec s;
  s.op = op;
  s.pairs = parse_format_pairs(pair);
  s.threads = threads;
  return run_sweep(s).front();
}

std::vector<int64_t> random_row(Rng& rng, std::size_t n, const QFormat& f) {
  std::vector<int64_t> x(n);
  for (auto& v : x) v = rng.uniform_int(f.raw_min(), f.raw_max());
  return x;
}

// 1
Outcome softmax_16bit() {
  const auto r = sweep_one("softmax", "S6.9/U1.15");
  return {r.mean_rel_err_pct <= kSoftmax16MeanMax && r.max_rel_err_pct <= kSoftmax16MaxMax,
          "S6.9/U1.15 mean=" + fmt(r.mean_rel_err_pct) + "% (<= 1.0) max=" +
              fmt(r.max_rel_err_pct) + "% (<= 3.0)"};
}

// 2
Outcome softmax_8bit_in() {
  const auto r16 = sweep_one("softmax", "S6.9/U1.15");
  const auto r = sweep_one("softmax", "S5.2/U1.15");
  const double m = r.mean_rel_err_pct;
  return {m >= kSoftmax8InLo && m <= kSoftmax8InHi && m > r16.mean_rel_err_pct,
          "S5.2/U1.15 mean=" + fmt(m) + "% in [2, 9], 16-bit mean=" + fmt(r16.mean_rel_err_pct) + "%"};
}

// 3
Outcome softmax_8bit_out() {
  const auto r = sweep_one("softmax", "S6.9/U1.7");
  return {r.mean_rel_err_pct >= kSoftmax8OutMin,
          "S6.9/U1.7 mean=" + fmt(r.mean_rel_err_pct) + "% (>= 50)"};
}

// 4
Outcome softmax_properties() {
  const QFormat f = S(6, 9);
  SoftmaxConfig three, two;
  three.in_fmt = two.in_fmt = f;
  two.variant = SoftmaxVariant::kTwoPassOnline;
  Rng rng(stream_seed(kDefaultSeed, 4));
  int shift_bad = 0, sum_bad = 0, argmax_bad = 0, argmax_inverted = 0, variant_bad = 0;
  double worst_sum = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto x = random_row(rng, 64, f);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const int64_t c = rng.uniform_int(f.raw_min() - *lo, f.raw_max() - *hi);
    auto xs = x;
    for (auto& v : xs) v += c;
    const auto y = softmax_fixed_row(x, three);
    if (y != softmax_fixed_row(xs, three)) ++shift_bad;
    if (y != softmax_fixed_row(x, two)) ++variant_bad;

    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 256));
    const auto xn = random_row(rng, n, f);
    double s = 0;
    for (int64_t v : softmax_fixed_row(xn, three)) s += dequantize(v, three.out_fmt);
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    if (std::abs(s - 1.0) > kSoftmaxSumTol) ++sum_bad;

    const auto it = std::max_element(x.begin(), x.end());
    if (std::count(x.begin(), x.end(), *it) == 1) {
      const auto i = static_cast<std::size_t>(it - x.begin());
      const auto j = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
      if (j != i) ++argmax_bad;
      if (y[j] > y[i]) ++argmax_inverted;
    }
  }
  return {shift_bad + sum_bad + argmax_bad + variant_bad == 0,
          "shift=" + std::to_string(shift_bad) + " sum=" + std::to_string(sum_bad) +
              " (worst |sum-1|=" + fmt(worst_sum, 5) + ") argmax=" + std::to_string(argmax_bad) +
              " (of which inverted " + std::to_string(argmax_inverted) + ", rest output ties) variant=" +
              std::to_string(variant_bad) + " mismatches"};
}

// 5
Outcome layernorm_band() {
  SweepSpec s;
  s.op = "layernorm";
  s.pairs = parse_format_pairs("S7/S8.7,U8/S8.7");
  const auto r = run_sweep(s);
  bool ok = true;
  std::string d;
  for (const auto& e : r) {
    ok = ok && e.mean_rel_err_pct <= kLayerNormMeanMax &&
         e.max_at_smallest_fraction >= kLayerNormLocationMin;
    d += e.in_fmt.str() + ": mean=" + fmt(e.mean_rel_err_pct) + "% (<= 1.5) max-at-smallest=" +
         fmt(100 * e.max_at_smallest_fraction, 1) + "% (>= 90)  ";
  }
  return {ok, d};
}

// 6
Outcome layernorm_cancellation() {
  Rng rng(stream_seed(kDefaultSeed, 6));
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const QFormat f = t % 2 ? U(8) : S(7);
    auto cfg = LayerNormConfig::identity(256, f);
    for (std::size_t i = 0; i < 256; ++i) {
      cfg.gamma[i] = rng.uniform(0.5, 1.5);
      cfg.beta[i] = rng.uniform(-0.5, 0.5);
    }
    FixedTensor x({1, 256}, f);
    x.raw = random_row(rng, 256, f);
    FixedTensor y = x;
    y.params = {rng.uniform(1e-3, 10.0), rng.uniform_int(-64, 64)};
    if (layernorm_fixed(x, cfg).raw != layernorm_fixed(y, cfg).raw) ++bad;
  }
  return {bad == 0, std::to_string(bad) + " of 1000 cases differ"};
}

// 7
Outcome gelu_bands() {
  SweepSpec s;
  s.op = "gelu";
  const auto r = run_sweep(s);
  const double a = r[0].mean_rel_err_pct, b = r[1].mean_rel_err_pct, c = r[2].mean_rel_err_pct;
  const bool ok = a <= kGelu16MeanMax && b >= kGelu8InLo && b <= kGelu8InHi && c >= kGelu8OutMin &&
                  a < b && b < c;
  return {ok, "S6.9/S5.10=" + fmt(a) + "% (<= 1.5) S3.4/S5.10=" + fmt(b) + "% in [3, 9] S6.9/S3.4=" +
                  fmt(c) + "% (>= 15)"};
}

// 8
Outcome int4_composition() {
  long bad8 = 0, bad16 = 0;
  for (int a = -128; a <= 127; ++a)
    for (int b = -128; b <= 127; ++b)
      if (mul_int8_via_int4(static_cast<int8_t>(a), static_cast<int8_t>(b)) != a * b) ++bad8;
  Rng rng(stream_seed(kDefaultSeed, 8));
  for (int i = 0; i < 1000000; ++i) {
    const auto a = static_cast<int16_t>(rng.uniform_int(-32768, 32767));
    const auto b = static_cast<int16_t>(rng.uniform_int(-32768, 32767));
    if (mul_int16_via_int4(a, b) != int32_t{a} * b) ++bad16;
  }
  const int16_t edges[] = {-32768, -1, 0, 1, 32767};
  for (int16_t a : edges)
    for (int16_t b : edges)
      if (mul_int16_via_int4(a, b) != int32_t{a} * b) ++bad16;
  return {bad8 + bad16 == 0, "int8 exhaustive mismatches=" + std::to_string(bad8) +
                                 ", int16 random+boundary mismatches=" + std::to_string(bad16)};
}

double fp8_oracle(uint8_t code, int eb, int mb, bool ieee) {
  const int bias = (1 << (eb - 1)) - 1;
  const int e = (code >> mb) & ((1 << eb) - 1), m = code & ((1 << mb) - 1);
  const double sign = (code & 0x80) ? -1.0 : 1.0;
  if (ieee && e == (1 << eb) - 1)
    return m ? std::numeric_limits<double>::quiet_NaN() : sign * std::numeric_limits<double>::infinity();
  if (!ieee && e == (1 << eb) - 1 && m == (1 << mb) - 1) return std::numeric_limits<double>::quiet_NaN();
  if (e == 0) return sign * std::ldexp(m, 1 - bias - mb);
  return sign * std::ldexp((1 << mb) + m, e - bias - mb);
}

// 9
Outcome fp8_codec() {
  int dec_bad = 0, rt_bad = 0, mac_bad = 0;
  for (auto f : {Fp8Format::kE4M3, Fp8Format::kE5M2}) {
    const bool e4 = f == Fp8Format::kE4M3;
    for (int c = 0; c < 256; ++c) {
      const Fp8Value v{static_cast<uint8_t>(c), f};
      const double got = fp8_decode(v), want = fp8_oracle(v.bits, e4 ? 4 : 5, e4 ? 3 : 2, !e4);
      if (std::isnan(want) ? !std::isnan(got) : (got != want || std::signbit(got) != std::signbit(want)))
        ++dec_bad;
      if (!fp8_is_nan(v) && !fp8_is_inf(v) && fp8_encode(got, f).bits != v.bits) ++rt_bad;
    }
    Rng rng(stream_seed(kDefaultSeed, e4 ? 90 : 91));
    int done = 0;
    while (done < 100000) {
      const Fp8Value a{static_cast<uint8_t>(rng.uniform_int(0, 255)), f};
      const Fp8Value b{static_cast<uint8_t>(rng.uniform_int(0, 255)), f};
      if (fp8_is_nan(a) || fp8_is_nan(b) || fp8_is_inf(a) || fp8_is_inf(b)) continue;
      const float acc = static_cast<float>(rng.uniform(-64, 64));
      const float want = static_cast<float>(fp8_decode(a)) * static_cast<float>(fp8_decode(b)) + acc;
      if (std::bit_cast<uint32_t>(fp8_mac(a, b, acc)) != std::bit_cast<uint32_t>(want)) ++mac_bad;
      ++done;
    }
  }
  return {dec_bad + rt_bad + mac_bad == 0, "decode=" + std::to_string(dec_bad) + " round-trip=" +
                                               std::to_string(rt_bad) + " mac=" + std::to_string(mac_bad) +
                                               " mismatches"};
}

// 10
Outcome matmul_correctness() {
  MacUnitConfig unit;
  unit.mode = MacMode::kInt8x2;
  const QFormat out = S(15, 8);
  Rng rng(stream_seed(kDefaultSeed, 10));
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    FixedTensor a({4, 256}, S(7), {rng.uniform(0.001, 0.05), 0});
    FixedTensor b({256, 4}, S(7), {rng.uniform(0.001, 0.05), 0});
    for (auto& r : a.raw) r = rng.uniform_int(-128, 127);
    for (auto& r : b.raw) r = rng.uniform_int(-128, 127);
    const auto y = matmul_fixed(a, b, unit, out, default_params(out));
    const auto g = matmul_ref(dequantize(a), dequantize(b));
    for (std::size_t i = 0; i < y.size(); ++i)
      worst = std::max(worst, std::abs(y.real(i) - g.values[i]) / out.lsb());
  }
  FixedTensor ones_a({1, 256}, S(7), {1.0, 0}), ones_b({256, 1}, S(7), {1.0, 0});
  std::fill(ones_a.raw.begin(), ones_a.raw.end(), 1);
  std::fill(ones_b.raw.begin(), ones_b.raw.end(), 1);
  const int64_t k256 = matmul_fixed(ones_a, ones_b, unit, S(15), {1.0, 0}).raw[0];
  return {worst <= kMatmulLsbTol && k256 == 256,
          "worst=" + fmt(worst, 3) + " LSB (<= 1), all-ones K=256 -> " + std::to_string(k256)};
}

// 11
Outcome pipeline_trace() {
  const EncoderConfig cfg;
  const auto w = make_weights(cfg);
  const auto x = make_input(cfg);
  const uint64_t before = mac_counter().load();
  const auto [y, trace] = encoder_forward(x, cfg, w);
  const uint64_t counted = mac_counter().load() - before;
  const double share = trace.matmul_share();
  return {trace.steps.size() == 26 && counted == trace.total_macs() && share > kMatmulShareMin,
          std::to_string(trace.steps.size()) + " steps, trace MACs=" + std::to_string(trace.total_macs()) +
              " counter=" + std::to_string(counted) + " matmul share=" + fmt(100 * share, 2) + "%"};
}

double bilinear_oracle(const RealTensor& m, double x, double y, std::size_t c) {
  const double h = static_cast<double>(m.shape[0]), w = static_cast<double>(m.shape[1]);
  x = std::min(std::max(x, 0.0), w - 1);
  y = std::min(std::max(y, 0.0), h - 1);
  auto at = [&](double yy, double xx) {
    return m.values[(static_cast<std::size_t>(yy) * m.shape[1] + static_cast<std::size_t>(xx)) * m.shape[2] + c];
  };
  const double x0 = std::floor(x), y0 = std::floor(y);
  const double x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double top = at(y0, x0) + (x - x0) * (at(y0, x1) - at(y0, x0));
  const double bot = at(y1, x0) + (x - x0) * (at(y1, x1) - at(y1, x0));
  return top + (y - y0) * (bot - top);
}

// 12
Outcome deformable_gather_check() {
  Rng rng(stream_seed(kDefaultSeed, 12));
  RealTensor m({10, 12, 1});
  for (auto& v : m.values) v = rng.uniform(-8, 8);
  GatherSpec s;
  s.queries = 10000;
  for (std::size_t q = 0; q < s.queries; ++q) {
    s.points.push_back(rng.uniform(-2, 14));
    s.points.push_back(rng.uniform(-2, 12));
    s.offsets.push_back(rng.uniform(-1.5, 1.5));
    s.offsets.push_back(rng.uniform(-1.5, 1.5));
  }
  const auto g = deformable_gather(m, s);
  double worst = 0;
  for (std::size_t q = 0; q < s.queries; ++q)
    worst = std::max(worst, std::abs(g.values[q] - bilinear_oracle(m, s.points[2 * q] + s.offsets[2 * q],
                                                                   s.points[2 * q + 1] + s.offsets[2 * q + 1], 0)));

  FixedTensor fm({6, 5, 3}, S(5, 10));
  for (auto& r : fm.raw) r = rng.uniform_int(fm.format.raw_min(), fm.format.raw_max());
  GatherSpec z;
  z.queries = 30;
  for (std::size_t q = 0; q < 30; ++q) {
    z.points.push_back(static_cast<double>(q % 5));
    z.points.push_back(static_cast<double>(q / 5));
  }
  z.offsets.assign(60, 0.0);
  const bool exact = deformable_gather(fm, z).raw == fm.raw;
  return {worst <= kGatherTol && exact,
          "max |diff|=" + std::to_string(worst) + " over 10^4 samples (<= 1e-12), zero-offset fixed exact=" +
              (exact ? "yes" : "no")};
}

// 13
Outcome determinism() {
  auto sweep_csv = [](const std::string& op, unsigned threads) {
    SweepSpec s;
    s.op = op;
    s.threads = threads;
    std::ostringstream os;
    write_csv(os, run_sweep(s));
    return os.str();
  };
  int bad = 0;
  for (const char* op : {"softmax", "layernorm", "gelu"}) {
    const auto base = sweep_csv(op, 1);
    for (unsigned t : {1u, 2u, 8u})
      if (sweep_csv(op, t) != base) ++bad;
  }
  auto trace_csv = [](std::size_t repeats) {
    std::ostringstream os;
    const EncoderConfig cfg;
    const auto r = profile(cfg, repeats);
    write_trace_csv(os, r.trace, false);
    os << summary_json(r, cfg, false).dump();
    return os.str();
  };
  const auto p1 = trace_csv(1);
  if (trace_csv(1) != p1) ++bad;
  const EncoderConfig cfg;
  const auto y1 = encoder_forward(make_input(cfg), cfg).first.raw;
  if (encoder_forward(make_input(cfg), cfg).first.raw != y1) ++bad;
  return {bad == 0, std::to_string(bad) + " differing reruns (sweeps at 1/2/8 threads, profile, encoder)"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"softmax 16-bit band", softmax_16bit},
      {"softmax 8-bit input degradation", softmax_8bit_in},
      {"softmax 8-bit output catastrophe", softmax_8bit_out},
      {"softmax exactness properties", softmax_properties},
      {"layernorm band and max-error location", layernorm_band},
      {"layernorm raw-scale cancellation", layernorm_cancellation},
      {"gelu bands and ordering", gelu_bands},
      {"int4 composition exactness", int4_composition},
      {"fp8 codec and mac", fp8_codec},
      {"matmul correctness", matmul_correctness},
      {"pipeline trace", pipeline_trace},
      {"deformable gather", deformable_gather_check},
      {"determinism", determinism},
  };
  int failed = 0, id = 0;
  for (const auto& [name, fn] : criteria) {
    ++id;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  }
  std::printf("%d of %d criteria passed\n", id - failed, id);
  return failed;
}
