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

#ifndef QFX_ENCODER_HPP_
#define QFX_ENCODER_HPP_

// Desk-scale encoder layer built from the fixed-point kernels, with a
// deformable-gather branch. One layer is the 26-step schedule below; the
// real-arithmetic path runs the identical schedule for comparison.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qfx/activation.hpp"
#include "qfx/gather.hpp"
#include "qfx/layernorm.hpp"
#include "qfx/matmul.hpp"
#include "qfx/qten.hpp"
#include "qfx/random.hpp"
#include "qfx/reorg.hpp"
#include "qfx/softmax.hpp"

namespace qfx {

struct EncoderFormats {
  QFormat act = S(6, 9);  // residual stream
  QFormat ln_out = S(4, 11);
  QFormat qkv = S(5, 10);
  QFormat score = S(6, 9);  // softmax input
  QFormat prob = U(1, 14);  // fits a signed 16-bit operand
  QFormat attn = S(5, 10);
  QFormat offset = S(5, 10);
  QFormat proj = S(5, 10);
  QFormat ffn_hidden = S(5, 10);
  QFormat gelu_out = S(5, 10);
  QFormat ffn_out = S(5, 10);
  QFormat weight = S(0, 15);
};

inline constexpr std::array<std::string_view, 7> kWeightNames = {
    "wq", "wk", "wv", "woff", "wo", "w1", "w2"};

struct EncoderConfig {
  std::size_t n_tokens = 64;
  std::size_t channels = 32;
  std::size_t heads = 4;
  std::size_t n_encode = 1;
  std::size_t n_decode = 1;  // reported only; no decoder layer is executed
  std::size_t grid_height = 8;
  std::size_t window = 4;
  std::size_t ffn_ratio = 4;
  MacUnitConfig mac{MacMode::kInt16x4};
  EncoderFormats formats;
  uint64_t input_seed = kDefaultSeed;
  uint64_t weight_seed = 1;
  int64_t weight_raw_range = 8192;  // 0 gives all-zero weights
  bool fixed_gather = false;  // real-arithmetic sampling unless set
  std::map<std::string, std::string> weight_files;

  std::size_t head_dim() const { return channels / heads; }
  std::size_t grid_width() const { return n_tokens / grid_height; }
  std::size_t hidden() const { return channels * ffn_ratio; }

  // Messages start with the offending key.
  void validate() const {
    auto bad = [](const std::string& key, const std::string& why) {
      fail(Errc::kConfig, key + ": " + why);
    };
    const std::pair<const char*, std::size_t> counts[] = {
        {"n_tokens", n_tokens}, {"channels", channels},       {"heads", heads},
        {"n_encode", n_encode}, {"n_decode", n_decode},       {"grid_height", grid_height},
        {"window", window},     {"ffn_ratio", ffn_ratio}};
    for (const auto& [k, v] : counts)
      if (v < 1) bad(k, "must be >= 1");
    if (channels % heads)
      bad("heads", "channels (" + std::to_string(channels) + ") is not divisible by heads (" +
                       std::to_string(heads) + ")");
    if (n_tokens % grid_height)
      bad("grid_height", "does not divide n_tokens (" + std::to_string(n_tokens) + ")");
    if (grid_height % window || grid_width() % window)
      bad("window", "does not divide the " + std::to_string(grid_height) + "x" +
                        std::to_string(grid_width()) + " token grid");
    SoftmaxConfig sm;
    sm.in_fmt = formats.score;
    sm.out_fmt = formats.prob;
    try {
      sm.validate();
    } catch (const Error& e) {
      bad("score", e.what());
    }
    if (n_tokens > sm.capacity())
      bad("n_tokens", "exceeds softmax accumulator capacity " + std::to_string(sm.capacity()));
    if (mac.is_fp8()) return;
    const int bits = mac.operand_bits();
    const std::pair<const char*, QFormat> operands[] = {
        {"ln_out", formats.ln_out}, {"qkv", formats.qkv},           {"prob", formats.prob},
        {"attn", formats.attn},     {"gelu_out", formats.gelu_out}, {"weight", formats.weight}};
    for (const auto& [k, f] : operands)
      if (f.raw_min() < -(int64_t{1} << (bits - 1)) || f.raw_max() >= (int64_t{1} << (bits - 1)))
        bad(k, f.str() + " does not fit " + std::string(to_string(mac.mode)) + " operands");
    if (weight_raw_range < 0 || weight_raw_range > formats.weight.raw_max())
      bad("raw_range", "must be in [0, " + std::to_string(formats.weight.raw_max()) + "]");
  }
};

struct EncoderWeights {
  FixedTensor wq, wk, wv;  // C x C
  FixedTensor woff;        // C x 2h
  FixedTensor wo;          // 2C x C
  FixedTensor w1;          // C x hidden
  FixedTensor w2;          // hidden x C
  std::vector<double> ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;

  FixedTensor* by_name(std::string_view n) {
    FixedTensor* all[] = {&wq, &wk, &wv, &woff, &wo, &w1, &w2};
    for (std::size_t i = 0; i < kWeightNames.size(); ++i)
      if (kWeightNames[i] == n) return all[i];
    return nullptr;
  }
};

inline Shape weight_shape(const EncoderConfig& cfg, std::string_view name) {
  const std::size_t c = cfg.channels;
  if (name == "woff") return {c, 2 * cfg.heads};
  if (name == "wo") return {2 * c, c};
  if (name == "w1") return {c, cfg.hidden()};
  if (name == "w2") return {cfg.hidden(), c};
  return {c, c};
}

// Seeded uniform init over [-raw_range, raw_range]; QTEN files override.
inline EncoderWeights make_weights(const EncoderConfig& cfg) {
  cfg.validate();
  EncoderWeights w;
  for (std::size_t i = 0; i < kWeightNames.size(); ++i) {
    const auto name = kWeightNames[i];
    const Shape shape = weight_shape(cfg, name);
    FixedTensor& t = *w.by_name(name);
    if (auto it = cfg.weight_files.find(std::string(name)); it != cfg.weight_files.end()) {
      auto any = load_qten(it->second);
      if (!std::holds_alternative<FixedTensor>(any))
        fail(Errc::kConfig, std::string(name) + ": " + it->second + " is not a fixed tensor");
      t = std::get<FixedTensor>(std::move(any));
      if (t.shape != shape)
        fail(Errc::kConfig, std::string(name) + ": shape " + shape_str(t.shape) +
                                " does not match " + shape_str(shape));
      continue;
    }
    t = FixedTensor(shape, cfg.formats.weight);
    Rng rng(stream_seed(cfg.weight_seed, i));
    for (auto& r : t.raw) r = rng.uniform_int(-cfg.weight_raw_range, cfg.weight_raw_range);
  }
  w.ln1_gamma.assign(cfg.channels, 1.0);
  w.ln2_gamma.assign(cfg.channels, 1.0);
  w.ln1_beta.assign(cfg.channels, 0.0);
  w.ln2_beta.assign(cfg.channels, 0.0);
  return w;
}

// Uniform [-2, 2] tokens quantized into the residual format.
inline FixedTensor make_input(const EncoderConfig& cfg) {
  FixedTensor x({cfg.n_tokens, cfg.channels}, cfg.formats.act);
  Rng rng(stream_seed(cfg.input_seed, 0));
  for (auto& r : x.raw) r = quantize(rng.uniform(-2.0, 2.0), x.format);
  return x;
}

// ---- schedule ---------------------------------------------------------------

enum class StepKind { kMatmul, kSoftmax, kLayerNorm, kActivation, kReorg, kGather, kEltwise };

inline std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::kMatmul: return "matmul";
    case StepKind::kSoftmax: return "softmax";
    case StepKind::kLayerNorm: return "layernorm";
    case StepKind::kActivation: return "activation";
    case StepKind::kReorg: return "reorg";
    case StepKind::kGather: return "gather";
    case StepKind::kEltwise: return "eltwise";
  }
  return "?";
}

struct ScheduleEntry {
  int id;
  std::string_view name;
  StepKind kind;
};

inline constexpr int kScheduleSteps = 26;

inline constexpr std::array<ScheduleEntry, kScheduleSteps> kSchedule = {{
    {1, "ln_attn", StepKind::kLayerNorm},
    {2, "q_proj", StepKind::kMatmul},
    {3, "k_proj", StepKind::kMatmul},
    {4, "v_proj", StepKind::kMatmul},
    {5, "attn_scores", StepKind::kMatmul},
    {6, "attn_softmax", StepKind::kSoftmax},
    {7, "v_split_heads", StepKind::kReorg},
    {8, "v_permute", StepKind::kReorg},
    {9, "offset_proj", StepKind::kMatmul},
    {10, "deform_gather", StepKind::kGather},
    {11, "attn_v", StepKind::kMatmul},
    {12, "o_permute", StepKind::kReorg},
    {13, "head_concat", StepKind::kReorg},
    {14, "gather_merge_heads", StepKind::kReorg},
    {15, "branch_concat", StepKind::kReorg},
    {16, "out_proj", StepKind::kMatmul},
    {17, "residual_attn", StepKind::kEltwise},
    {18, "ln_ffn", StepKind::kLayerNorm},
    {19, "ffn_window_partition", StepKind::kReorg},
    {20, "ffn_tile_flatten", StepKind::kReorg},
    {21, "ffn_up", StepKind::kMatmul},
    {22, "ffn_gelu", StepKind::kActivation},
    {23, "ffn_down", StepKind::kMatmul},
    {24, "ffn_tile_unflatten", StepKind::kReorg},
    {25, "ffn_window_reverse", StepKind::kReorg},
    {26, "residual_ffn", StepKind::kEltwise},
}};

// Multiplies per step for one layer.
inline uint64_t step_macs(const EncoderConfig& cfg, int id) {
  const uint64_t n = cfg.n_tokens, c = cfg.channels, h = cfg.heads, hid = cfg.hidden();
  switch (id) {
    case 1: case 18: return 3 * n * c;
    case 2: case 3: case 4: return n * c * c;
    case 5: case 11: return n * n * c;
    case 9: return n * c * 2 * h;
    case 10: return cfg.fixed_gather ? 4 * n * c : 0;
    case 16: return n * 2 * c * c;
    case 21: case 23: return n * c * hid;
    case 22: return n * hid;
    default: return 0;
  }
}

struct TraceStep {
  std::size_t layer = 0;
  int step_id = 0;
  std::string name;
  StepKind kind = StepKind::kReorg;
  std::string dims;
  uint64_t mac_count = 0;
  double elapsed_us = 0.0;
};

struct OpTrace {
  std::vector<TraceStep> steps;

  uint64_t total_macs() const {
    uint64_t t = 0;
    for (const auto& s : steps) t += s.mac_count;
    return t;
  }
  uint64_t macs_of(StepKind k) const {
    uint64_t t = 0;
    for (const auto& s : steps)
      if (s.kind == k) t += s.mac_count;
    return t;
  }
  double matmul_share() const {
    const auto total = total_macs();
    return total ? static_cast<double>(macs_of(StepKind::kMatmul)) / static_cast<double>(total) : 0.0;
  }
};

// ---- backends -----------------------------------------------------------------

namespace detail {

template <class T>
T columns(const T& x, std::size_t c0, std::size_t n) {
  const std::size_t rows = x.shape[0], c = x.shape[1];
  T out = like(x, {rows, n});
  auto& dst = data(out);
  dst.resize(rows * n);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) dst[r * n + j] = data(x)[r * c + c0 + j];
  return out;
}

struct FixedOps {
  using Tensor = FixedTensor;
  const EncoderConfig& cfg;
  const EncoderWeights& w;

  const FixedTensor& weight(const FixedTensor& t) const { return t; }

  Tensor layernorm(const Tensor& x, const std::vector<double>& g,
                   const std::vector<double>& b) const {
    LayerNormConfig ln;
    ln.in_fmt = x.format;
    ln.out_fmt = cfg.formats.ln_out;
    ln.mean_fmt = S(x.format.magnitude_bits(), 7);
    ln.std_fmt = U(x.format.magnitude_bits(), 6);
    ln.gamma = g;
    ln.beta = b;
    return layernorm_fixed(x, ln);
  }

  // Stores C / fold; the result is relabeled with default params.
  Tensor matmul(const Tensor& a, const Tensor& b, const QFormat& out, double fold = 1.0) const {
    Tensor r = matmul_fixed(a, b, cfg.mac, out, {out.lsb() * fold, 0});
    r.params = default_params(out);
    return r;
  }

  Tensor scores(const Tensor& q, const Tensor& kt) const {
    const QFormat f = cfg.formats.score;
    return matmul_fixed(q, kt, cfg.mac, f, softmax_input_params(f));
  }

  Tensor softmax(const Tensor& s) const {
    SoftmaxConfig sm;
    sm.in_fmt = s.format;
    sm.out_fmt = cfg.formats.prob;
    return softmax_fixed(s, sm);
  }

  Tensor gelu(const Tensor& x) const {
    ActivationConfig a;
    a.kind = ActivationKind::kGelu;
    a.in_fmt = x.format;
    a.out_fmt = cfg.formats.gelu_out;
    return activation_fixed(x, a);
  }

  Tensor gather(const Tensor& map, const GatherSpec& spec, const QFormat& out) const {
    if (!cfg.fixed_gather) return quantize(deformable_gather(dequantize(map), spec), out,
                                           default_params(out), nullptr);
    Tensor g = deformable_gather(map, spec);
    if (g.format != out) {
      for (auto& r : g.raw) r = requantize(r, g.format, out);
      g.format = out;
      g.params = default_params(out);
    }
    return g;
  }

  std::vector<double> offsets(const Tensor& off) const { return dequantize(off).values; }

  Tensor add(const Tensor& a, const Tensor& b, const QFormat& out) const {
    const int f = std::max(a.format.frac_bits, b.format.frac_bits);
    Tensor r(a.shape, out);
    for (std::size_t i = 0; i < a.size(); ++i)
      r.raw[i] = rescale((a.raw[i] << (f - a.format.frac_bits)) +
                             (b.raw[i] << (f - b.format.frac_bits)),
                         f, out);
    return r;
  }
};

struct RealOps {
  using Tensor = RealTensor;
  const EncoderConfig& cfg;
  const EncoderWeights& w;

  RealTensor weight(const FixedTensor& t) const { return dequantize(t); }

  Tensor layernorm(const Tensor& x, const std::vector<double>& g,
                   const std::vector<double>& b) const {
    LayerNormConfig ln;
    ln.gamma = g;
    ln.beta = b;
    return layernorm_ref(x, ln);
  }

  Tensor matmul(const Tensor& a, const Tensor& b, const QFormat&, double fold = 1.0) const {
    Tensor r = matmul_ref(a, b);
    for (auto& v : r.values) v /= fold;
    return r;
  }

  Tensor scores(const Tensor& q, const Tensor& kt) const { return matmul_ref(q, kt); }
  Tensor softmax(const Tensor& s) const { return softmax_ref(s); }
  Tensor gelu(const Tensor& x) const {
    ActivationConfig a;
    a.kind = ActivationKind::kGelu;
    return activation_ref(x, a);
  }
  Tensor gather(const Tensor& map, const GatherSpec& spec, const QFormat&) const {
    return deformable_gather(map, spec);
  }
  std::vector<double> offsets(const Tensor& off) const { return off.values; }
  Tensor add(const Tensor& a, const Tensor& b, const QFormat&) const {
    Tensor r(a.shape);
    for (std::size_t i = 0; i < a.size(); ++i) r.values[i] = a.values[i] + b.values[i];
    return r;
  }
};

template <class Ops>
typename Ops::Tensor encoder_layer(const typename Ops::Tensor& x, const EncoderConfig& cfg,
                                   const Ops& ops, std::size_t layer, OpTrace& trace) {
  using T = typename Ops::Tensor;
  const auto& f = cfg.formats;
  const std::size_t n = cfg.n_tokens, c = cfg.channels, h = cfg.heads, d = cfg.head_dim();
  const std::size_t gh = cfg.grid_height, gw = cfg.grid_width(), ws = cfg.window;
  auto dims = [](std::initializer_list<std::size_t> v) { return shape_str(Shape(v)); };

  auto step = [&](int id, std::string dim, auto&& fn) {
    const auto& e = kSchedule[static_cast<std::size_t>(id - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto r = fn();
      const auto t1 = std::chrono::steady_clock::now();
      trace.steps.push_back({layer, id, std::string(e.name), e.kind, std::move(dim),
                             step_macs(cfg, id),
                             std::chrono::duration<double, std::micro>(t1 - t0).count()});
      return r;
    } catch (const Error& err) {
      fail(err.code(), "step " + std::to_string(id) + " (" + std::string(e.name) +
                           "): " + err.what());
    }
  };

  const auto wq = ops.weight(ops.w.wq), wk = ops.weight(ops.w.wk), wv = ops.weight(ops.w.wv);
  const auto woff = ops.weight(ops.w.woff), wo = ops.weight(ops.w.wo);
  const auto w1 = ops.weight(ops.w.w1), w2 = ops.weight(ops.w.w2);

  T a = step(1, dims({n, c}), [&] { return ops.layernorm(x, ops.w.ln1_gamma, ops.w.ln1_beta); });
  // 1/sqrt(d) folded into the Q requantization.
  T q = step(2, dims({n, c, c}), [&] { return ops.matmul(a, wq, f.qkv, std::sqrt(double(d))); });
  T k = step(3, dims({n, c, c}), [&] { return ops.matmul(a, wk, f.qkv); });
  T v = step(4, dims({n, c, c}), [&] { return ops.matmul(a, wv, f.qkv); });
  T s = step(5, dims({h, n, d, n}), [&] {
    std::vector<T> per_head;
    for (std::size_t i = 0; i < h; ++i) {
      T sh = ops.scores(columns(q, i * d, d), transpose(columns(k, i * d, d)));
      per_head.push_back(reshape(sh, {1, n, n}));
    }
    return concatenate(per_head, 0);
  });
  T p = step(6, dims({h, n, n}), [&] { return ops.softmax(s); });
  T vh = step(7, dims({n, h, d}), [&] { return reshape(v, {n, h, d}); });
  T vp = step(8, dims({h, n, d}), [&] { return permute(vh, {1, 0, 2}); });
  T off = step(9, dims({n, c, 2 * h}), [&] { return ops.matmul(a, woff, f.offset); });
  T g = step(10, dims({n, h, d}), [&] {
    GatherSpec spec;
    spec.queries = n;
    spec.heads = h;
    spec.head_split = true;
    spec.points.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      spec.points[2 * i] = static_cast<double>(i % gw);
      spec.points[2 * i + 1] = static_cast<double>(i / gw);
    }
    spec.offsets = ops.offsets(off);
    return ops.gather(reshape(v, {gh, gw, c}), spec, f.attn);
  });
  T o = step(11, dims({h, n, n, d}), [&] {
    const auto ph = split(p, 0, std::vector<std::size_t>(h, 1));
    const auto vs = split(vp, 0, std::vector<std::size_t>(h, 1));
    std::vector<T> per_head;
    for (std::size_t i = 0; i < h; ++i)
      per_head.push_back(reshape(
          ops.matmul(reshape(ph[i], {n, n}), reshape(vs[i], {n, d}), f.attn), {1, n, d}));
    return concatenate(per_head, 0);
  });
  T op = step(12, dims({n, h, d}), [&] { return permute(o, {1, 0, 2}); });
  T oc = step(13, dims({n, c}), [&] { return reshape(op, {n, c}); });
  T gc = step(14, dims({n, c}), [&] { return reshape(g, {n, c}); });
  T cat = step(15, dims({n, 2 * c}), [&] { return concatenate(std::vector<T>{oc, gc}, 1); });
  T y = step(16, dims({n, 2 * c, c}), [&] { return ops.matmul(cat, wo, f.proj); });
  T r1 = step(17, dims({n, c}), [&] { return ops.add(x, y, f.act); });
  T b = step(18, dims({n, c}), [&] { return ops.layernorm(r1, ops.w.ln2_gamma, ops.w.ln2_beta); });
  T win = step(19, dims({(gh / ws) * (gw / ws), ws * ws, c}),
               [&] { return window_partition(reshape(b, {gh, gw, c}), ws); });
  T tiles = step(20, dims({n, c}), [&] { return reshape(win, {n, c}); });
  T hid = step(21, dims({n, c, cfg.hidden()}), [&] { return ops.matmul(tiles, w1, f.ffn_hidden); });
  T act = step(22, dims({n, cfg.hidden()}), [&] { return ops.gelu(hid); });
  T down = step(23, dims({n, cfg.hidden(), c}), [&] { return ops.matmul(act, w2, f.ffn_out); });
  T unt = step(24, dims({(gh / ws) * (gw / ws), ws * ws, c}),
               [&] { return reshape(down, {(gh / ws) * (gw / ws), ws * ws, c}); });
  T back = step(25, dims({gh, gw, c}), [&] { return window_reverse(unt, gh, gw); });
  return step(26, dims({n, c}), [&] { return ops.add(r1, reshape(back, {n, c}), f.act); });
}

}  // namespace detail

inline void check_encoder_input(const Shape& shape, const EncoderConfig& cfg) {
  if (shape != Shape{cfg.n_tokens, cfg.channels})
    fail(Errc::kShapeMismatch, "encoder: input shape " + shape_str(shape) + " is not " +
                                   std::to_string(cfg.n_tokens) + "x" +
                                   std::to_string(cfg.channels));
}

inline std::pair<FixedTensor, OpTrace> encoder_forward(const FixedTensor& x,
                                                       const EncoderConfig& cfg,
                                                       const EncoderWeights& w) {
  cfg.validate();
  check_encoder_input(x.shape, cfg);
  if (x.format != cfg.formats.act)
    fail(Errc::kInvalidFormat, "encoder: input format " + x.format.str() + " is not " +
                                   cfg.formats.act.str());
  OpTrace trace;
  detail::FixedOps ops{cfg, w};
  FixedTensor cur = x;
  for (std::size_t l = 0; l < cfg.n_encode; ++l) cur = detail::encoder_layer(cur, cfg, ops, l, trace);
  return {std::move(cur), std::move(trace)};
}

inline std::pair<FixedTensor, OpTrace> encoder_forward(const FixedTensor& x,
                                                       const EncoderConfig& cfg) {
  return encoder_forward(x, cfg, make_weights(cfg));
}

// Same schedule in double precision with the dequantized weights.
inline std::pair<RealTensor, OpTrace> encoder_forward_real(const RealTensor& x,
                                                           const EncoderConfig& cfg,
                                                           const EncoderWeights& w) {
  cfg.validate();
  check_encoder_input(x.shape, cfg);
  OpTrace trace;
  detail::RealOps ops{cfg, w};
  RealTensor cur = x;
  for (std::size_t l = 0; l < cfg.n_encode; ++l) cur = detail::encoder_layer(cur, cfg, ops, l, trace);
  return {std::move(cur), std::move(trace)};
}

}  // namespace qfx

#endif  // QFX_ENCODER_HPP_
