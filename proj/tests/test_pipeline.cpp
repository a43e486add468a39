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


#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qfx/encoder.hpp"
#include "qfx/mac_counter.hpp"
#include "qfx/oracle.hpp"
#include "qfx/profile.hpp"
#include "qfx/reorg.hpp"

namespace qfx {
namespace {

FixedTensor iota_fixed(Shape s) {
  FixedTensor t(s, S(15));
  std::iota(t.raw.begin(), t.raw.end(), int64_t{-100});
  return t;
}

int64_t checksum(const std::vector<int64_t>& v) {
  int64_t h = 0;
  for (int64_t x : v) h += x * x * 31 + x;
  return h;
}

// ---- reorg --------------------------------------------------------------------

TEST(Reorg, TransposeTwiceIsIdentity) {
  const auto x = iota_fixed({3, 5});
  const auto t = transpose(x);
  EXPECT_EQ(t.shape, (Shape{5, 3}));
  EXPECT_EQ(t.raw[1], x.raw[5]);
  EXPECT_EQ(transpose(t).raw, x.raw);
  const auto b = iota_fixed({2, 3, 4});
  EXPECT_EQ(transpose(transpose(b)).raw, b.raw);
}

TEST(Reorg, SplitConcatenateRoundTrip) {
  const auto x = iota_fixed({4, 6, 2});
  for (std::size_t axis = 0; axis < 3; ++axis) {
    std::vector<std::size_t> sizes;
    if (axis == 0) sizes = {1, 3};
    if (axis == 1) sizes = {2, 0, 4};
    if (axis == 2) sizes = {1, 1};
    const auto parts = split(x, axis, sizes);
    ASSERT_EQ(parts.size(), sizes.size());
    int64_t sum = 0;
    for (const auto& p : parts) sum += checksum(p.raw);
    EXPECT_EQ(sum, checksum(x.raw));
    EXPECT_EQ(concatenate(parts, axis).raw, x.raw);
  }
  EXPECT_THROW(split(x, 1, {2, 2}), Error);
  EXPECT_THROW(split(x, 3, {4}), Error);
}

TEST(Reorg, PermuteMatchesIndexOracle) {
  const auto x = iota_fixed({2, 3, 4});
  const auto y = permute(x, {2, 0, 1});
  ASSERT_EQ(y.shape, (Shape{4, 2, 3}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k)
        EXPECT_EQ(y.raw[(k * 2 + i) * 3 + j], x.raw[(i * 3 + j) * 4 + k]);
  EXPECT_EQ(checksum(y.raw), checksum(x.raw));
  EXPECT_THROW(permute(x, {0, 0, 1}), Error);
  EXPECT_THROW(permute(x, {0, 1}), Error);
}

TEST(Reorg, PermuteInverseRoundTrip4d) {
  const auto x = iota_fixed({2, 3, 4, 5});
  const auto y = permute(x, {3, 1, 0, 2});
  EXPECT_EQ(permute(y, {2, 1, 3, 0}).raw, x.raw);
}

TEST(Reorg, ReshapeAndWindows) {
  const auto x = iota_fixed({8, 8, 3});
  EXPECT_THROW(reshape(x, {7, 3}), Error);
  const auto w = window_partition(x, 4);
  EXPECT_EQ(w.shape, (Shape{4, 16, 3}));
  // Window 1 is the top-right 4x4 block.
  EXPECT_EQ(w.raw[(1 * 16 + 0) * 3], x.raw[(0 * 8 + 4) * 3]);
  EXPECT_EQ(w.raw[(2 * 16 + 5) * 3 + 2], x.raw[(5 * 8 + 1) * 3 + 2]);
  EXPECT_EQ(checksum(w.raw), checksum(x.raw));
  EXPECT_EQ(window_reverse(w, 8, 8).raw, x.raw);
  EXPECT_THROW(window_partition(x, 3), Error);
}

TEST(Reorg, ConcatenateRequiresMatchingFormat) {
  auto a = iota_fixed({2, 2});
  auto b = iota_fixed({2, 2});
  b.format = S(14);
  EXPECT_THROW(concatenate(std::vector<FixedTensor>{a, b}, 0), Error);
  const RealTensor r({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(concatenate(std::vector<RealTensor>{r, r}, 1).values,
            (std::vector<double>{1, 2, 1, 2, 3, 4, 3, 4}));
}

// ---- gather -------------------------------------------------------------------

double bilinear_oracle(const RealTensor& m, double x, double y, std::size_t c) {
  const auto h = static_cast<double>(m.shape[0]), w = static_cast<double>(m.shape[1]);
  x = std::min(std::max(x, 0.0), w - 1);
  y = std::min(std::max(y, 0.0), h - 1);
  auto at = [&](double yy, double xx) {
    return m.values[(static_cast<std::size_t>(yy) * m.shape[1] + static_cast<std::size_t>(xx)) *
                        m.shape[2] + c];
  };
  const double x0 = std::floor(x), y0 = std::floor(y);
  const double x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double ax = x - x0, ay = y - y0;
  const double top = at(y0, x0) + ax * (at(y0, x1) - at(y0, x0));
  const double bot = at(y1, x0) + ax * (at(y1, x1) - at(y1, x0));
  return top + ay * (bot - top);
}

RealTensor random_map(Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
  RealTensor m({h, w, c});
  for (auto& v : m.values) v = rng.uniform(-5, 5);
  return m;
}

TEST(Gather, ZeroOffsetsAtPixelCenters) {
  Rng rng(1);
  const auto m = random_map(rng, 5, 7, 3);
  GatherSpec s;
  s.queries = 2;
  s.points = {3, 2, 6, 4};
  s.offsets = {0, 0, 0, 0};
  const auto g = deformable_gather(m, s);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(g.values[c], m.values[(2 * 7 + 3) * 3 + c]);
    EXPECT_EQ(g.values[3 + c], m.values[(4 * 7 + 6) * 3 + c]);
  }
}

TEST(Gather, MidpointIsMean) {
  const RealTensor m({2, 2, 1}, {1, 2, 3, 10});
  GatherSpec s;
  s.queries = 1;
  s.points = {0.5, 0.5};
  s.offsets = {0, 0};
  EXPECT_DOUBLE_EQ(deformable_gather(m, s).values[0], 4.0);
}

TEST(Gather, MatchesBruteForceOracle) {
  Rng rng(2);
  const std::size_t h = 9, w = 13, c = 8, heads = 4;
  const auto m = random_map(rng, h, w, c);
  GatherSpec s;
  s.queries = 2500;
  s.heads = heads;
  for (std::size_t q = 0; q < s.queries; ++q) {
    s.points.push_back(rng.uniform(-1, static_cast<double>(w)));
    s.points.push_back(rng.uniform(-1, static_cast<double>(h)));
  }
  for (std::size_t i = 0; i < s.queries * heads; ++i) {
    s.offsets.push_back(rng.uniform(-2, 2));
    s.offsets.push_back(rng.uniform(-2, 2));
  }
  for (bool split : {false, true}) {
    s.head_split = split;
    const auto g = deformable_gather(m, s);
    const std::size_t cout = split ? c / heads : c;
    for (std::size_t q = 0; q < s.queries; ++q)
      for (std::size_t hh = 0; hh < heads; ++hh) {
        const double x = s.points[2 * q] + s.offsets[(q * heads + hh) * 2];
        const double y = s.points[2 * q + 1] + s.offsets[(q * heads + hh) * 2 + 1];
        for (std::size_t k = 0; k < cout; ++k)
          ASSERT_NEAR(g.values[(q * heads + hh) * cout + k],
                      bilinear_oracle(m, x, y, (split ? hh * cout : 0) + k), 1e-12);
      }
  }
}

TEST(Gather, FixedIntegralCoordinatesBitExact) {
  FixedTensor m({4, 4, 2}, S(5, 10));
  Rng rng(3);
  for (auto& r : m.raw) r = rng.uniform_int(m.format.raw_min(), m.format.raw_max());
  GatherSpec s;
  s.queries = 16;
  for (std::size_t q = 0; q < 16; ++q) {
    s.points.push_back(static_cast<double>(q % 4));
    s.points.push_back(static_cast<double>(q / 4));
  }
  s.offsets.assign(32, 0.0);
  const uint64_t before = mac_counter().load();
  const auto g = deformable_gather(m, s);
  EXPECT_EQ(mac_counter().load() - before, 16u * 2u * 4u);
  EXPECT_EQ(g.raw, m.raw);
  EXPECT_EQ(g.format, m.format);
}

TEST(Gather, FixedTracksReal) {
  Rng rng(4);
  FixedTensor m({6, 6, 4}, S(5, 10));
  for (auto& r : m.raw) r = rng.uniform_int(-8000, 8000);
  GatherSpec s;
  s.queries = 200;
  s.heads = 2;
  s.head_split = true;
  for (std::size_t q = 0; q < s.queries; ++q) {
    s.points.push_back(rng.uniform(0, 5));
    s.points.push_back(rng.uniform(0, 5));
  }
  for (std::size_t i = 0; i < s.queries * 4; ++i) s.offsets.push_back(rng.uniform(-1, 1));
  const auto f = deformable_gather(m, s);
  const auto r = deformable_gather(dequantize(m), s);
  for (std::size_t i = 0; i < f.size(); ++i)
    ASSERT_NEAR(f.real(i), r.values[i], 2 * m.format.lsb());
}

TEST(Gather, Validation) {
  const RealTensor m({2, 2, 3}, std::vector<double>(12, 1.0));
  GatherSpec s;
  s.queries = 1;
  s.heads = 2;
  s.points = {0, 0};
  s.offsets = {0, 0, 0, 0};
  s.head_split = true;
  EXPECT_THROW(deformable_gather(m, s), Error);  // 3 channels, 2 heads
  s.head_split = false;
  s.offsets = {0, 0};
  EXPECT_THROW(deformable_gather(m, s), Error);
  s.offsets = {0, 0, std::nan(""), 0};
  EXPECT_THROW(deformable_gather(m, s), Error);
}

// ---- encoder ------------------------------------------------------------------

TEST(Encoder, DefaultTraceHas26Steps) {
  const EncoderConfig cfg;
  const auto [y, trace] = encoder_forward(make_input(cfg), cfg);
  ASSERT_EQ(trace.steps.size(), 26u);
  for (int i = 0; i < 26; ++i) {
    EXPECT_EQ(trace.steps[static_cast<std::size_t>(i)].step_id, i + 1);
    EXPECT_EQ(trace.steps[static_cast<std::size_t>(i)].name,
              kSchedule[static_cast<std::size_t>(i)].name);
  }
  EXPECT_EQ(y.shape, (Shape{64, 32}));
  EXPECT_EQ(y.format, cfg.formats.act);
  // Anchored matmul steps.
  for (int id : {2, 3, 4, 5, 11, 21, 23})
    EXPECT_EQ(trace.steps[static_cast<std::size_t>(id - 1)].kind, StepKind::kMatmul) << id;
}

TEST(Encoder, QkvMacCount) {
  const EncoderConfig cfg;
  const auto [y, trace] = encoder_forward(make_input(cfg), cfg);
  uint64_t qkv = 0;
  for (int id : {2, 3, 4}) qkv += trace.steps[static_cast<std::size_t>(id - 1)].mac_count;
  EXPECT_EQ(qkv, 196608u);
}

TEST(Encoder, TraceSumEqualsCounter) {
  for (bool fixed_gather : {false, true}) {
    EncoderConfig cfg;
    cfg.fixed_gather = fixed_gather;
    const auto x = make_input(cfg);
    const auto w = make_weights(cfg);
    const uint64_t before = mac_counter().load();
    const auto [y, trace] = encoder_forward(x, cfg, w);
    EXPECT_EQ(mac_counter().load() - before, trace.total_macs());
    EXPECT_GT(trace.matmul_share(), 0.8);
  }
}

TEST(Encoder, DoublingChannels) {
  EncoderConfig a, b;
  b.channels = 64;
  EXPECT_EQ(step_macs(b, 2), 4 * step_macs(a, 2));
  const auto [ya, ta] = encoder_forward(make_input(a), a);
  const auto [yb, tb] = encoder_forward(make_input(b), b);
  EXPECT_EQ(ta.steps[5].dims, tb.steps[5].dims);  // h x N x N either way
  EXPECT_EQ(tb.steps[1].mac_count, 4 * ta.steps[1].mac_count);
}

TEST(Encoder, MultipleLayers) {
  EncoderConfig cfg;
  cfg.n_encode = 2;
  const auto [y, trace] = encoder_forward(make_input(cfg), cfg);
  ASSERT_EQ(trace.steps.size(), 52u);
  EXPECT_EQ(trace.steps[26].layer, 1u);
  EXPECT_EQ(trace.steps[26].step_id, 1);
}

TEST(Encoder, ZeroWeightsAndInput) {
  EncoderConfig cfg;
  cfg.weight_raw_range = 0;
  FixedTensor x({cfg.n_tokens, cfg.channels}, cfg.formats.act);
  const auto [y, trace] = encoder_forward(x, cfg);
  for (int64_t r : y.raw) ASSERT_EQ(r, 0);
  EXPECT_EQ(trace.steps.size(), 26u);
}

TEST(Encoder, FixedAgreesWithReal) {
  for (uint64_t seed : {7u, 8u, 9u}) {
    EncoderConfig cfg;
    cfg.input_seed = seed;
    const auto w = make_weights(cfg);
    const auto x = make_input(cfg);
    const auto [y, t1] = encoder_forward(x, cfg, w);
    const auto [g, t2] = encoder_forward_real(dequantize(x), cfg, w);
    EXPECT_LE(compare(y, g).mean_rel_err_pct, 5.0) << seed;
  }
}

TEST(Encoder, Deterministic) {
  const EncoderConfig cfg;
  const auto [a, ta] = encoder_forward(make_input(cfg), cfg);
  const auto [b, tb] = encoder_forward(make_input(cfg), cfg);
  EXPECT_EQ(a.raw, b.raw);
}

TEST(Encoder, ValidationNamesKey) {
  auto expect_key = [](EncoderConfig cfg, const std::string& key) {
    try {
      cfg.validate();
      ADD_FAILURE() << "accepted " << key;
    } catch (const Error& e) {
      EXPECT_EQ(std::string(e.what()).rfind(key + ":", 0), 0u) << e.what();
    }
  };
  EncoderConfig c;
  c.heads = 5;
  expect_key(c, "heads");
  c = {};
  c.grid_height = 7;
  expect_key(c, "grid_height");
  c = {};
  c.window = 3;
  expect_key(c, "window");
  c = {};
  c.n_encode = 0;
  expect_key(c, "n_encode");
  c = {};
  c.formats.score = S(9, 6);
  expect_key(c, "score");
  c = {};
  c.mac.mode = MacMode::kInt8x2;
  expect_key(c, "ln_out");
  c = {};
  c.n_tokens = 1024;
  c.grid_height = 32;
  expect_key(c, "n_tokens");
}

TEST(Encoder, StepErrorsCarryStepId) {
  EncoderConfig cfg;
  cfg.formats.prob = U(1, 15);  // does not fit a signed 16-bit operand
  auto w = make_weights(EncoderConfig{});
  try {
    // Bypass validate() to reach the failing matmul.
    OpTrace trace;
    detail::FixedOps ops{cfg, w};
    detail::encoder_layer(make_input(cfg), cfg, ops, 0, trace);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("step 11"), std::string::npos) << e.what();
  }
  EXPECT_THROW(encoder_forward(FixedTensor({3, 32}, S(6, 9)), EncoderConfig{}), Error);
}

TEST(Encoder, WeightsFromQtenFiles) {
  const EncoderConfig cfg;
  const auto seeded = make_weights(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "qfx_weights_test";
  std::filesystem::create_directories(dir);
  FixedTensor wq = seeded.wq;
  for (auto& r : wq.raw) r /= 2;
  save_qten((dir / "wq.qten").string(), wq);
  EncoderConfig from_file = cfg;
  from_file.weight_files["wq"] = (dir / "wq.qten").string();
  EXPECT_EQ(make_weights(from_file).wq.raw, wq.raw);
  EXPECT_EQ(make_weights(from_file).wk.raw, seeded.wk.raw);
  save_qten((dir / "bad.qten").string(), FixedTensor({2, 2}, S(0, 15)));
  from_file.weight_files["wq"] = (dir / "bad.qten").string();
  EXPECT_THROW(make_weights(from_file), Error);
  std::filesystem::remove_all(dir);
}

// ---- profile and config -----------------------------------------------------

TEST(Profile, RepeatsKeepCounts) {
  const EncoderConfig cfg;
  const auto one = profile(cfg, 1);
  const auto five = profile(cfg, 5);
  ASSERT_EQ(one.trace.steps.size(), 26u);
  for (std::size_t i = 0; i < 26; ++i)
    EXPECT_EQ(one.trace.steps[i].mac_count, five.trace.steps[i].mac_count);
  EXPECT_EQ(one.counted_macs, one.trace.total_macs());
  EXPECT_EQ(five.counted_macs, one.counted_macs);
  EXPECT_GT(one.trace.matmul_share(), 0.8);
  EXPECT_THROW(profile(cfg, 0), Error);
}

TEST(Profile, CsvAndSummary) {
  const EncoderConfig cfg;
  const auto r = profile(cfg, 1);
  std::ostringstream a, b;
  write_trace_csv(a, r.trace, false);
  write_trace_csv(b, profile(cfg, 3).trace, false);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step_id,kind,dims,mac_count,elapsed_us");
  std::getline(in, line);
  EXPECT_EQ(line, "1,layernorm,64x32,6144,");
  const auto j = summary_json(r, cfg);
  EXPECT_EQ(j["steps"], 26);
  EXPECT_EQ(j["total_macs"], j["counted_macs"]);
  EXPECT_GT(j["matmul_mac_share"].get<double>(), 0.8);
  EXPECT_EQ(j["macs_by_kind"]["softmax"], 0);
}

TEST(Config, ParsesAllSections) {
  std::istringstream in(R"(
; comment
[encoder]
n_tokens = 16
channels = 16
heads = 2
grid_height = 4
window = 2
mac_mode = int16
[formats]
qkv = S4.11
[weights]
seed = 3
raw_range = 100
w1 = w1.qten
)");
  const auto cfg = parse_encoder_config(in, "/data");
  EXPECT_EQ(cfg.n_tokens, 16u);
  EXPECT_EQ(cfg.heads, 2u);
  EXPECT_EQ(cfg.formats.qkv, S(4, 11));
  EXPECT_EQ(cfg.weight_seed, 3u);
  EXPECT_EQ(cfg.weight_raw_range, 100);
  EXPECT_EQ(cfg.weight_files.at("w1"), "/data/w1.qten");
}

TEST(Config, ErrorsNameTheKey) {
  auto msg = [](const std::string& text) -> std::string {
    std::istringstream in(text);
    try {
      parse_encoder_config(in);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kConfig);
      return e.what();
    }
    return "";
  };
  EXPECT_NE(msg("[encoder]\nchannels = 30\n").find("heads"), std::string::npos);
  EXPECT_NE(msg("[encoder]\nbogus = 1\n").find("encoder.bogus"), std::string::npos);
  EXPECT_NE(msg("[formats]\nqkv = Q5\n").find("formats.qkv"), std::string::npos);
  EXPECT_NE(msg("[encoder]\nheads = x\n").find("encoder.heads"), std::string::npos);
  EXPECT_NE(msg("[encoder]\nmac_mode = int32\n").find("encoder.mac_mode"), std::string::npos);
  EXPECT_NE(msg("[extra]\nk = 1\n").find("extra"), std::string::npos);
  EXPECT_NE(msg("[encoder]\nheads = 0\n").find("encoder.heads"), std::string::npos);
}

TEST(Config, BundledDefaultMatchesBuiltIn) {
  const auto cfg = load_encoder_config(std::string(QFX_SOURCE_DIR) + "/configs/encoder_default.ini");
  const EncoderConfig d;
  EXPECT_EQ(cfg.n_tokens, d.n_tokens);
  EXPECT_EQ(cfg.channels, d.channels);
  EXPECT_EQ(cfg.mac.mode, d.mac.mode);
  EXPECT_EQ(cfg.formats.prob, d.formats.prob);
  EXPECT_EQ(cfg.weight_raw_range, d.weight_raw_range);
  EXPECT_THROW(load_encoder_config("/nonexistent.ini"), Error);
}

}  // namespace
}  // namespace qfx
