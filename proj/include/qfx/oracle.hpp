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

#ifndef QFX_ORACLE_HPP_
#define QFX_ORACLE_HPP_

// Error metrics against real-arithmetic goldens and the sweep engine.
//
// Relative error per element: |y_fx - y_fp| / max(|y_fp|, eps).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfx/activation.hpp"
#include "qfx/layernorm.hpp"
#include "qfx/parallel.hpp"
#include "qfx/random.hpp"
#include "qfx/softmax.hpp"

namespace qfx {

inline constexpr double kDefaultEpsilonGuard = 1e-6;

struct ErrorReport {
  std::string op;
  QFormat in_fmt;
  QFormat out_fmt;
  double mean_rel_err_pct = 0.0;
  double max_rel_err_pct = 0.0;
  std::size_t max_err_index = 0;
  std::size_t n_elements = 0;
  double epsilon_guard = kDefaultEpsilonGuard;
  uint64_t seed = 0;
  // Sweeps only: fraction of rows whose largest error sits at the element
  // with the smallest |golden| (ties count).
  double max_at_smallest_fraction = 0.0;
};

inline double relative_error(double fx, double fp, double eps) {
  return std::abs(fx - fp) / std::max(std::abs(fp), eps);
}

inline ErrorReport compare(std::span<const double> fixed, std::span<const double> golden,
                           double epsilon_guard = kDefaultEpsilonGuard) {
  if (fixed.size() != golden.size())
    fail(Errc::kShapeMismatch, "compare: element counts differ");
  if (fixed.empty()) fail(Errc::kEmptyInput, "compare: no elements");
  ErrorReport r;
  r.epsilon_guard = epsilon_guard;
  r.n_elements = fixed.size();
  double sum = 0.0, mx = -1.0;
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    const double e = relative_error(fixed[i], golden[i], epsilon_guard);
    sum += e;
    if (e > mx) {
      mx = e;
      r.max_err_index = i;
    }
  }
  r.mean_rel_err_pct = 100.0 * sum / static_cast<double>(fixed.size());
  r.max_rel_err_pct = 100.0 * mx;
  return r;
}

inline ErrorReport compare(const FixedTensor& fixed, const RealTensor& golden,
                           double epsilon_guard = kDefaultEpsilonGuard) {
  if (fixed.shape != golden.shape)
    fail(Errc::kShapeMismatch, "compare: shapes " + shape_str(fixed.shape) + " and " +
                                   shape_str(golden.shape) + " differ");
  const RealTensor deq = dequantize(fixed);
  auto r = compare(deq.values, golden.values, epsilon_guard);
  r.in_fmt = fixed.format;
  r.out_fmt = fixed.format;
  return r;
}

// ---- sweeps ----------------------------------------------------------------

enum class Distribution { kUniform, kNormal };

struct FormatPair {
  QFormat in;
  QFormat out;
};

// "S6.9/U1.15,S5.2/U1.15"
inline std::vector<FormatPair> parse_format_pairs(std::string_view text) {
  std::vector<FormatPair> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const auto item = text.substr(pos, comma - pos);
    const auto slash = item.find('/');
    if (slash == std::string_view::npos)
      fail(Errc::kParse, "format pair '" + std::string(item) + "' needs IN/OUT");
    out.push_back({QFormat::parse(item.substr(0, slash)),
                   QFormat::parse(item.substr(slash + 1))});
    pos = comma + 1;
  }
  return out;
}

struct SweepSpec {
  std::string op = "softmax";
  std::vector<FormatPair> pairs;
  Distribution distribution = Distribution::kUniform;
  std::size_t rows = 1000;
  std::size_t row_length = 0;  // 0: operator default
  uint64_t seed = kDefaultSeed;
  // Real inputs drawn on [-R, R] and quantized into in_fmt. 0 draws raw codes
  // over the full range of in_fmt. Unset: operator default.
  std::optional<double> input_range;
  double epsilon_guard = kDefaultEpsilonGuard;
  SoftmaxVariant softmax_variant = SoftmaxVariant::kThreePass;
  unsigned threads = 0;  // 0: QFX_THREADS or hardware concurrency
};

struct SweepOperator {
  std::string name;
  std::size_t default_row_length;
  double default_range;
  // Input quantization parameters for a format.
  std::function<QuantParams(const QFormat&)> input_params;
  std::function<std::vector<int64_t>(std::span<const int64_t>, const FormatPair&,
                                     const SweepSpec&)>
      run;
  std::function<std::vector<double>(std::span<const double>)> golden;
};

inline const std::vector<SweepOperator>& sweep_operators() {
  static const std::vector<SweepOperator> ops = [] {
    std::vector<SweepOperator> v;
    v.push_back({"softmax", 64, 2.0, softmax_input_params,
                 [](std::span<const int64_t> x, const FormatPair& p, const SweepSpec& s) {
                   SoftmaxConfig cfg;
                   cfg.in_fmt = p.in;
                   cfg.out_fmt = p.out;
                   cfg.variant = s.softmax_variant;
                   return softmax_fixed_row(x, cfg);
                 },
                 [](std::span<const double> x) { return softmax_ref(x); }});
    v.push_back({"layernorm", 256, 0.0,
                 [](const QFormat& f) { return default_params(f); },
                 [](std::span<const int64_t> x, const FormatPair& p, const SweepSpec&) {
                   auto cfg = LayerNormConfig::identity(x.size(), p.in);
                   cfg.out_fmt = p.out;
                   return layernorm_fixed_row(x, cfg);
                 },
                 [](std::span<const double> x) {
                   const std::vector<double> g(x.size(), 1.0), b(x.size(), 0.0);
                   return layernorm_ref(x, g, b, LayerNormConfig{}.epsilon);
                 }});
    for (auto kind : {ActivationKind::kGelu, ActivationKind::kRelu,
                      ActivationKind::kLeakyRelu, ActivationKind::kElu,
                      ActivationKind::kSelu, ActivationKind::kSigmoid,
                      ActivationKind::kTanh}) {
      v.push_back({std::string(to_string(kind)), 100, 3.0,
                   [](const QFormat& f) { return default_params(f); },
                   [kind](std::span<const int64_t> x, const FormatPair& p, const SweepSpec&) {
                     ActivationConfig cfg;
                     cfg.kind = kind;
                     cfg.in_fmt = p.in;
                     cfg.out_fmt = p.out;
                     cfg.validate();
                     std::vector<int64_t> y(x.size());
                     for (std::size_t i = 0; i < x.size(); ++i) y[i] = activation_fixed(x[i], cfg);
                     return y;
                   },
                   [kind](std::span<const double> x) {
                     ActivationConfig cfg;
                     cfg.kind = kind;
                     std::vector<double> y(x.size());
                     for (std::size_t i = 0; i < x.size(); ++i) y[i] = activation_ref(x[i], cfg);
                     return y;
                   }});
    }
    return v;
  }();
  return ops;
}

inline const SweepOperator& find_sweep_operator(std::string_view name) {
  for (const auto& op : sweep_operators())
    if (op.name == name) return op;
  fail(Errc::kUnknownOperator, "unknown operator '" + std::string(name) + "'");
}

// Standard format pairs per operator.
inline std::vector<FormatPair> default_format_pairs(std::string_view op) {
  if (op == "softmax")
    return {{S(6, 9), U(1, 15)}, {S(5, 2), U(1, 15)}, {S(6, 9), U(1, 7)}};
  if (op == "layernorm") return {{S(7), S(8, 7)}, {U(8), S(8, 7)}};
  if (op == "gelu")
    return {{S(6, 9), S(5, 10)}, {S(3, 4), S(5, 10)}, {S(6, 9), S(3, 4)}};
  return {{S(6, 9), S(5, 10)}};
}

struct SweepInput {
  std::vector<int64_t> raw;
  std::vector<double> real;  // golden inputs
};

// Deterministic draw for one row; depends only on (seed, row, format).
inline SweepInput sweep_row_input(const SweepSpec& spec, const SweepOperator& op,
                                  const QFormat& in, std::size_t row, std::size_t len) {
  Rng rng(stream_seed(spec.seed, row));
  const double range = spec.input_range.value_or(op.default_range);
  const QuantParams params = op.input_params(in);
  SweepInput s;
  s.raw.resize(len);
  s.real.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    if (range > 0.0) {
      const double x = spec.distribution == Distribution::kUniform
                           ? rng.uniform(-range, range)
                           : rng.normal(0.0, range / 2);
      s.real[i] = x;
      s.raw[i] = quantize(x, in, params);
    } else {
      int64_t r;
      if (spec.distribution == Distribution::kUniform) {
        r = rng.uniform_int(in.raw_min(), in.raw_max());
      } else {
        const double mid = 0.5 * static_cast<double>(in.raw_min() + in.raw_max());
        const double sd = static_cast<double>(in.raw_max() - in.raw_min()) / 6.0;
        r = saturate(static_cast<int64_t>(std::nearbyint(rng.normal(mid, sd))), in);
      }
      s.raw[i] = r;
      s.real[i] = dequantize(r, params);
    }
  }
  return s;
}

struct RowErrors {
  double sum = 0.0;
  double max = -1.0;
  std::size_t argmax = 0;
  bool max_at_smallest = false;
};

inline ErrorReport run_sweep_pair(const SweepSpec& spec, const SweepOperator& op,
                                  const FormatPair& pair) {
  const std::size_t len = spec.row_length ? spec.row_length : op.default_row_length;
  const QuantParams out_params = default_params(pair.out);
  std::vector<RowErrors> rows(spec.rows);
  parallel_for(spec.rows, spec.threads, [&](std::size_t r) {
    const auto in = sweep_row_input(spec, op, pair.in, r, len);
    const auto y = op.run(in.raw, pair, spec);
    const auto g = op.golden(in.real);
    RowErrors& re = rows[r];
    std::size_t smallest = 0;
    std::vector<double> e(len);
    for (std::size_t i = 0; i < len; ++i) {
      e[i] = relative_error(dequantize(y[i], out_params), g[i], spec.epsilon_guard);
      re.sum += e[i];
      if (e[i] > re.max) {
        re.max = e[i];
        re.argmax = i;
      }
      if (std::abs(g[i]) < std::abs(g[smallest])) smallest = i;
    }
    re.max_at_smallest = e[smallest] >= re.max;
  });

  ErrorReport rep;
  rep.op = op.name;
  rep.in_fmt = pair.in;
  rep.out_fmt = pair.out;
  rep.epsilon_guard = spec.epsilon_guard;
  rep.seed = spec.seed;
  rep.n_elements = spec.rows * len;
  double sum = 0.0, mx = -1.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    sum += rows[r].sum;
    if (rows[r].max > mx) {
      mx = rows[r].max;
      rep.max_err_index = r * len + rows[r].argmax;
    }
    hits += rows[r].max_at_smallest ? 1 : 0;
  }
  rep.mean_rel_err_pct = 100.0 * sum / static_cast<double>(rep.n_elements);
  rep.max_rel_err_pct = 100.0 * mx;
  rep.max_at_smallest_fraction = static_cast<double>(hits) / static_cast<double>(rows.size());
  return rep;
}

inline void validate(const SweepSpec& spec) {
  if (spec.rows == 0) fail(Errc::kInvalidArgument, "sweep: rows must be >= 1");
  if (spec.input_range && (!std::isfinite(*spec.input_range) || *spec.input_range < 0))
    fail(Errc::kInvalidArgument, "sweep: range must be finite and >= 0");
  if (!(spec.epsilon_guard > 0)) fail(Errc::kInvalidArgument, "sweep: eps must be > 0");
}

inline std::vector<ErrorReport> run_sweep(const SweepSpec& spec) {
  validate(spec);
  const auto& op = find_sweep_operator(spec.op);
  const auto pairs = spec.pairs.empty() ? default_format_pairs(spec.op) : spec.pairs;
  std::vector<ErrorReport> out;
  for (const auto& p : pairs) out.push_back(run_sweep_pair(spec, op, p));
  return out;
}

// ---- output ----------------------------------------------------------------

inline constexpr const char* kSweepCsvHeader =
    "operator,in_fmt,out_fmt,mean_err_pct,max_err_pct,max_err_index,seed,n_samples";

inline std::string format_fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string to_csv_row(const ErrorReport& r) {
  return r.op + "," + r.in_fmt.str() + "," + r.out_fmt.str() + "," +
         format_fixed(r.mean_rel_err_pct) + "," + format_fixed(r.max_rel_err_pct) + "," +
         std::to_string(r.max_err_index) + "," + std::to_string(r.seed) + "," +
         std::to_string(r.n_elements);
}

inline void write_csv(std::ostream& os, const std::vector<ErrorReport>& reports) {
  os << kSweepCsvHeader << "\n";
  for (const auto& r : reports) os << to_csv_row(r) << "\n";
}

inline nlohmann::json to_json(const ErrorReport& r) {
  return {{"operator", r.op},
          {"in_fmt", r.in_fmt.str()},
          {"out_fmt", r.out_fmt.str()},
          {"mean_err_pct", r.mean_rel_err_pct},
          {"max_err_pct", r.max_rel_err_pct},
          {"max_err_index", r.max_err_index},
          {"seed", r.seed},
          {"n_samples", r.n_elements}};
}

inline nlohmann::json to_json(const std::vector<ErrorReport>& reports) {
  auto arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

// ---- acceptance bands -------------------------------------------------------
//
// JSON array of {"operator", "in_fmt", "out_fmt", "mean_err_pct": [lo, hi],
// "max_err_pct": [lo, hi]}; either range may be omitted.

struct Band {
  std::string op;
  QFormat in_fmt;
  QFormat out_fmt;
  std::optional<std::pair<double, double>> mean;
  std::optional<std::pair<double, double>> max;
};

inline std::vector<Band> parse_bands(const std::string& text) {
  std::vector<Band> out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array()) fail(Errc::kParse, "bands: expected a JSON array");
    for (const auto& e : j) {
      Band b;
      b.op = e.at("operator").get<std::string>();
      b.in_fmt = QFormat::parse(e.at("in_fmt").get<std::string>());
      b.out_fmt = QFormat::parse(e.at("out_fmt").get<std::string>());
      auto range = [&](const char* key) -> std::optional<std::pair<double, double>> {
        if (!e.contains(key)) return std::nullopt;
        const auto& r = e.at(key);
        if (!r.is_array() || r.size() != 2)
          fail(Errc::kParse, std::string("bands: ") + key + " must be [lo, hi]");
        return std::make_pair(r[0].get<double>(), r[1].get<double>());
      };
      b.mean = range("mean_err_pct");
      b.max = range("max_err_pct");
      out.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParse, std::string("bands: ") + e.what());
  }
  return out;
}

// Human-readable violations; empty when every matching band holds.
inline std::vector<std::string> check_bands(const std::vector<ErrorReport>& reports,
                                            const std::vector<Band>& bands) {
  std::vector<std::string> bad;
  for (const auto& r : reports) {
    for (const auto& b : bands) {
      if (b.op != r.op || b.in_fmt != r.in_fmt || b.out_fmt != r.out_fmt) continue;
      auto check = [&](const char* what, double v,
                       const std::optional<std::pair<double, double>>& band) {
        if (band && (v < band->first || v > band->second))
          bad.push_back(r.op + " " + r.in_fmt.str() + "/" + r.out_fmt.str() + ": " +
                        what + " " + format_fixed(v, 4) + " outside [" +
                        format_fixed(band->first, 4) + ", " +
                        format_fixed(band->second, 4) + "]");
      };
      check("mean_err_pct", r.mean_rel_err_pct, b.mean);
      check("max_err_pct", r.max_rel_err_pct, b.max);
    }
  }
  return bad;
}

}  // namespace qfx

#endif  // QFX_ORACLE_HPP_
