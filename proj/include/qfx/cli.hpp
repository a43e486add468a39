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

#ifndef QFX_CLI_HPP_
#define QFX_CLI_HPP_

// Command-line front end. Machine-readable output goes to `out`, messages to
// `err`. Exit codes: 0 ok, 1 usage or I/O error, 2 band violation.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfx/qfx.hpp"

namespace qfx {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitBands = 2;

namespace cli {

inline FixedTensor load_fixed(const std::string& path) {
  auto any = load_qten(path);
  if (auto* f = std::get_if<FixedTensor>(&any)) return std::move(*f);
  fail(Errc::kInvalidArgument, path + ": expected a fixed-point tensor");
}

inline RealTensor load_real(const std::string& path) {
  auto any = load_qten(path);
  if (auto* r = std::get_if<RealTensor>(&any)) return std::move(*r);
  return dequantize(std::get<FixedTensor>(any));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to `path`, or to `out` when path is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream f(path);
  if (!f) fail(Errc::kIo, "cannot open " + path + " for writing");
  fn(f);
  if (!f) fail(Errc::kIo, "write failed: " + path);
}

struct QuantizeArgs {
  std::string in, out, format;
  std::optional<double> scale;
  int64_t zero_point = 0;
};

inline int cmd_quantize(const QuantizeArgs& a, std::ostream& err) {
  const QFormat f = QFormat::parse(a.format);
  require_valid(f, "--format");
  QuantParams p = default_params(f);
  if (a.scale) p.scale = *a.scale;
  p.zero_point = a.zero_point;
  require_valid(p, "--scale/--zero-point");
  const RealTensor x = load_real(a.in);
  std::size_t sat = 0;
  const FixedTensor q = quantize(x, f, p, &sat);
  save_qten(a.out, q);
  err << "saturations: " << sat << "\n";
  return kExitOk;
}

struct RunOpArgs {
  std::string op, in, in2, out, out_format, mac_mode = "int8", variant = "three-pass";
};

inline int cmd_run_op(const RunOpArgs& a, std::ostream& err) {
  const FixedTensor x = load_fixed(a.in);
  std::optional<QFormat> of;
  if (!a.out_format.empty()) of = QFormat::parse(a.out_format);
  FixedTensor y;
  if (a.op == "softmax") {
    SoftmaxConfig cfg;
    cfg.in_fmt = x.format;
    if (of) cfg.out_fmt = *of;
    if (a.variant == "two-pass") cfg.variant = SoftmaxVariant::kTwoPassOnline;
    else if (a.variant != "three-pass")
      fail(Errc::kInvalidArgument, "--variant must be three-pass or two-pass");
    y = softmax_fixed(x, cfg);
  } else if (a.op == "layernorm") {
    const std::size_t c = x.shape.empty() ? x.size() : x.shape.back();
    auto cfg = LayerNormConfig::identity(c, x.format);
    cfg.mean_fmt = S(std::max(x.format.magnitude_bits(), cfg.mean_fmt.int_bits), 7);
    cfg.std_fmt = U(std::max(x.format.magnitude_bits(), cfg.std_fmt.int_bits), 6);
    if (of) cfg.out_fmt = *of;
    y = layernorm_fixed(x, cfg);
  } else if (a.op == "matmul") {
    if (a.in2.empty()) fail(Errc::kInvalidArgument, "matmul needs --in2");
    MacUnitConfig unit;
    if (!parse_mac_mode(a.mac_mode, unit.mode))
      fail(Errc::kInvalidArgument, "unknown --mac-mode '" + a.mac_mode + "'");
    const FixedTensor b = load_fixed(a.in2);
    const QFormat f = of.value_or(S(15, 16));
    y = matmul_fixed(x, b, unit, f, default_params(f));
  } else {
    ActivationConfig cfg;
    if (!parse_activation(a.op, cfg.kind))
      fail(Errc::kUnknownOperator, "unknown operator '" + a.op + "'");
    cfg.in_fmt = x.format;
    if (of) cfg.out_fmt = *of;
    y = activation_fixed(x, cfg);
  }
  save_qten(a.out, y);
  err << a.op << ": " << shape_str(y.shape) << " " << y.format.str() << "\n";
  return kExitOk;
}

struct SweepArgs {
  std::string op, formats, dist = "uniform", out, bands, variant = "three-pass";
  std::size_t rows = 1000, len = 0;
  uint64_t seed = kDefaultSeed;
  std::optional<double> range;
  double eps = kDefaultEpsilonGuard;
  unsigned threads = 0;
  bool json = false;
};

inline int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  SweepSpec spec;
  spec.op = a.op;
  find_sweep_operator(spec.op);
  if (!a.formats.empty()) spec.pairs = parse_format_pairs(a.formats);
  if (a.dist == "normal") spec.distribution = Distribution::kNormal;
  else if (a.dist != "uniform") fail(Errc::kInvalidArgument, "--dist must be uniform or normal");
  if (a.variant == "two-pass") spec.softmax_variant = SoftmaxVariant::kTwoPassOnline;
  else if (a.variant != "three-pass")
    fail(Errc::kInvalidArgument, "--variant must be three-pass or two-pass");
  spec.rows = a.rows;
  spec.row_length = a.len;
  spec.seed = a.seed;
  spec.input_range = a.range;
  spec.epsilon_guard = a.eps;
  spec.threads = a.threads;
  std::vector<Band> bands;
  if (!a.bands.empty()) bands = parse_bands(read_file(a.bands));
  const auto reports = run_sweep(spec);
  emit(a.out, out, [&](std::ostream& os) {
    if (a.json) os << to_json(reports).dump(2) << "\n";
    else write_csv(os, reports);
  });
  if (!a.bands.empty()) {
    const auto bad = check_bands(reports, bands);
    for (const auto& b : bad) err << "band violation: " << b << "\n";
    if (!bad.empty()) return kExitBands;
  }
  return kExitOk;
}

struct ProfileArgs {
  std::string config, out, summary;
  std::size_t repeats = 1;
  bool json = false, no_timings = false;
};

inline int cmd_profile(const ProfileArgs& a, std::ostream& out, std::ostream& err) {
  const EncoderConfig cfg = a.config.empty() ? EncoderConfig{} : load_encoder_config(a.config);
  const auto res = profile(cfg, a.repeats);
  const bool timings = !a.no_timings;
  const auto summary = summary_json(res, cfg, timings);
  emit(a.out, out, [&](std::ostream& os) {
    if (a.json) os << summary.dump(2) << "\n";
    else write_trace_csv(os, res.trace, timings);
  });
  if (!a.summary.empty())
    emit(a.summary, out, [&](std::ostream& os) { os << summary.dump(2) << "\n"; });
  err << res.trace.steps.size() << " steps, " << res.trace.total_macs() << " MACs, matmul share "
      << format_fixed(100.0 * res.trace.matmul_share(), 2) << "%\n";
  return kExitOk;
}

struct CompareArgs {
  std::string fixed, golden;
  double eps = kDefaultEpsilonGuard;
  bool json = false;
};

inline int cmd_compare(const CompareArgs& a, std::ostream& out) {
  auto r = compare(load_fixed(a.fixed), load_real(a.golden), a.eps);
  r.op = "compare";
  if (a.json) out << to_json(r).dump(2) << "\n";
  else write_csv(out, {r});
  return kExitOk;
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"qfx: fixed-point transformer kernels"};
  app.require_subcommand(1);

  cli::QuantizeArgs qa;
  auto* q = app.add_subcommand("quantize", "Quantize a real QTEN tensor");
  q->add_option("--in", qa.in, "Real input tensor")->required();
  q->add_option("--format", qa.format, "Q-format, e.g. S6.9")->required();
  q->add_option("--scale", qa.scale, "Scale (default: format LSB)");
  q->add_option("--zero-point", qa.zero_point, "Zero point");
  q->add_option("--out", qa.out, "Output fixed tensor")->required();

  cli::RunOpArgs ra;
  auto* r = app.add_subcommand("run-op", "Run one fixed-point operator");
  r->add_option("--op", ra.op, "softmax, layernorm, matmul or an activation")->required();
  r->add_option("--in", ra.in, "Fixed input tensor")->required();
  r->add_option("--in2", ra.in2, "Second matmul operand");
  r->add_option("--out-format", ra.out_format, "Output Q-format");
  r->add_option("--mac-mode", ra.mac_mode, "int4, int8, int16, e4m3, e5m2");
  r->add_option("--variant", ra.variant, "Softmax: three-pass or two-pass");
  r->add_option("--out", ra.out, "Output tensor")->required();

  cli::SweepArgs sa;
  auto* s = app.add_subcommand("sweep", "Error sweep against the double-precision reference");
  s->add_option("--op", sa.op, "Operator")->required();
  s->add_option("--formats", sa.formats, "IN/OUT pairs, comma separated");
  s->add_option("--rows", sa.rows, "Rows");
  s->add_option("--len", sa.len, "Row length (0: operator default)");
  s->add_option("--seed", sa.seed, "Seed");
  s->add_option("--range", sa.range, "Real input range R; 0 draws raw codes");
  s->add_option("--dist", sa.dist, "uniform or normal");
  s->add_option("--eps", sa.eps, "Relative-error epsilon guard");
  s->add_option("--variant", sa.variant, "Softmax: three-pass or two-pass");
  s->add_option("--threads", sa.threads, "Worker threads (0: QFX_THREADS or all cores)");
  s->add_option("--out", sa.out, "Output file (default stdout)");
  s->add_option("--assert-bands", sa.bands, "JSON band file; exit 2 on violation");
  s->add_flag("--json", sa.json, "Emit JSON instead of CSV");

  cli::ProfileArgs pa;
  auto* p = app.add_subcommand("profile", "Profile the encoder layer");
  p->add_option("--config", pa.config, "Encoder config file");
  p->add_option("--repeats", pa.repeats, "Repeats; timings are medians");
  p->add_option("--out", pa.out, "Trace output file (default stdout)");
  p->add_option("--summary", pa.summary, "Write the JSON summary here");
  p->add_flag("--json", pa.json, "Emit the JSON summary instead of the trace");
  p->add_flag("--no-timings", pa.no_timings, "Omit timings");

  cli::CompareArgs ca;
  auto* c = app.add_subcommand("compare", "Relative error of a fixed tensor against a real one");
  c->add_option("--fixed", ca.fixed, "Fixed tensor")->required();
  c->add_option("--golden", ca.golden, "Real reference tensor")->required();
  c->add_option("--eps", ca.eps, "Epsilon guard");
  c->add_flag("--json", ca.json, "Emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*q) return cli::cmd_quantize(qa, err);
    if (*r) return cli::cmd_run_op(ra, err);
    if (*s) return cli::cmd_sweep(sa, out, err);
    if (*p) return cli::cmd_profile(pa, out, err);
    return cli::cmd_compare(ca, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace qfx

#endif  // QFX_CLI_HPP_
