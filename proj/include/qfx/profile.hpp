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

#ifndef QFX_PROFILE_HPP_
#define QFX_PROFILE_HPP_

// Encoder profiling, trace serialization and the INI-style config reader.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "qfx/encoder.hpp"
#include "qfx/mac_counter.hpp"

namespace qfx {

struct ProfileResult {
  OpTrace trace;  // elapsed_us holds per-step medians
  std::size_t repeats = 0;
  uint64_t counted_macs = 0;  // mac_counter() delta for one forward pass
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline ProfileResult profile(const EncoderConfig& cfg, std::size_t repeats) {
  if (repeats < 1) fail(Errc::kInvalidArgument, "profile: repeats must be >= 1");
  cfg.validate();
  const EncoderWeights w = make_weights(cfg);
  const FixedTensor x = make_input(cfg);
  ProfileResult res;
  res.repeats = repeats;
  std::vector<std::vector<double>> times;
  for (std::size_t r = 0; r < repeats; ++r) {
    const uint64_t before = mac_counter().load();
    auto [y, trace] = encoder_forward(x, cfg, w);
    const uint64_t counted = mac_counter().load() - before;
    if (r == 0) {
      res.trace = trace;
      res.counted_macs = counted;
      times.resize(trace.steps.size());
    }
    for (std::size_t i = 0; i < trace.steps.size(); ++i)
      times[i].push_back(trace.steps[i].elapsed_us);
  }
  for (std::size_t i = 0; i < times.size(); ++i) res.trace.steps[i].elapsed_us = median(times[i]);
  return res;
}

inline constexpr const char* kTraceCsvHeader = "step_id,kind,dims,mac_count,elapsed_us";

// Timings are optional so the output can be compared byte for byte.
inline void write_trace_csv(std::ostream& os, const OpTrace& t, bool with_timings = true) {
  os << kTraceCsvHeader << '\n';
  for (const auto& s : t.steps) {
    os << s.step_id << ',' << to_string(s.kind) << ',' << s.dims << ',' << s.mac_count << ',';
    if (with_timings) {
      std::ostringstream us;
      us.setf(std::ios::fixed);
      us.precision(3);
      us << s.elapsed_us;
      os << us.str();
    }
    os << '\n';
  }
}

inline nlohmann::json summary_json(const ProfileResult& r, const EncoderConfig& cfg,
                                   bool with_timings = true) {
  nlohmann::json by_kind = nlohmann::json::object();
  for (StepKind k : {StepKind::kMatmul, StepKind::kSoftmax, StepKind::kLayerNorm,
                     StepKind::kActivation, StepKind::kReorg, StepKind::kGather,
                     StepKind::kEltwise})
    by_kind[std::string(to_string(k))] = r.trace.macs_of(k);
  nlohmann::json j = {
      {"n_tokens", cfg.n_tokens},
      {"channels", cfg.channels},
      {"heads", cfg.heads},
      {"n_encode", cfg.n_encode},
      {"n_decode", cfg.n_decode},
      {"mac_mode", std::string(to_string(cfg.mac.mode))},
      {"steps", r.trace.steps.size()},
      {"repeats", r.repeats},
      {"total_macs", r.trace.total_macs()},
      {"counted_macs", r.counted_macs},
      {"macs_by_kind", by_kind},
      {"matmul_mac_share", r.trace.matmul_share()},
  };
  if (with_timings) {
    double total = 0.0;
    for (const auto& s : r.trace.steps) total += s.elapsed_us;
    j["total_elapsed_us"] = total;
  }
  return j;
}

// ---- config file --------------------------------------------------------------

namespace detail {

template <class T>
T config_value(const boost::property_tree::ptree& node, const std::string& key) {
  try {
    return node.get_value<T>();
  } catch (const boost::property_tree::ptree_error&) {
    fail(Errc::kConfig, key + ": invalid value '" + node.data() + "'");
  }
}

inline std::size_t config_count(const boost::property_tree::ptree& node, const std::string& key) {
  const auto v = config_value<long long>(node, key);
  if (v < 1) fail(Errc::kConfig, key + ": must be >= 1");
  return static_cast<std::size_t>(v);
}

inline QFormat config_format(const boost::property_tree::ptree& node, const std::string& key) {
  try {
    return QFormat::parse(node.data());
  } catch (const Error& e) {
    fail(Errc::kConfig, key + ": " + e.what());
  }
}

}  // namespace detail

// Sections [encoder], [formats], [weights]; every key is optional and
// unknown keys are rejected. Relative weight paths resolve against base_dir.
inline EncoderConfig parse_encoder_config(std::istream& is, const std::string& base_dir = "") {
  namespace pt = boost::property_tree;
  pt::ptree root;
  try {
    pt::read_ini(is, root);
  } catch (const pt::ini_parser_error& e) {
    fail(Errc::kConfig, std::string("config: ") + e.message() + " at line " +
                            std::to_string(e.line()));
  }
  EncoderConfig cfg;
  for (const auto& [section, body] : root) {
    if (body.empty() && !body.data().empty())
      fail(Errc::kConfig, section + ": key outside of a section");
    for (const auto& [key, node] : body) {
      const std::string k = section + "." + key;
      if (section == "encoder") {
        if (key == "n_tokens") cfg.n_tokens = detail::config_count(node, k);
        else if (key == "channels") cfg.channels = detail::config_count(node, k);
        else if (key == "heads") cfg.heads = detail::config_count(node, k);
        else if (key == "n_encode") cfg.n_encode = detail::config_count(node, k);
        else if (key == "n_decode") cfg.n_decode = detail::config_count(node, k);
        else if (key == "grid_height") cfg.grid_height = detail::config_count(node, k);
        else if (key == "window") cfg.window = detail::config_count(node, k);
        else if (key == "ffn_ratio") cfg.ffn_ratio = detail::config_count(node, k);
        else if (key == "seed") cfg.input_seed = detail::config_value<uint64_t>(node, k);
        else if (key == "fixed_gather") cfg.fixed_gather = detail::config_value<bool>(node, k);
        else if (key == "mac_mode") {
          if (!parse_mac_mode(node.data(), cfg.mac.mode))
            fail(Errc::kConfig, k + ": unknown mode '" + node.data() + "'");
        } else fail(Errc::kConfig, k + ": unknown key");
      } else if (section == "formats") {
        auto& f = cfg.formats;
        QFormat* slot = key == "act"          ? &f.act
                        : key == "ln_out"     ? &f.ln_out
                        : key == "qkv"        ? &f.qkv
                        : key == "score"      ? &f.score
                        : key == "prob"       ? &f.prob
                        : key == "attn"       ? &f.attn
                        : key == "offset"     ? &f.offset
                        : key == "proj"       ? &f.proj
                        : key == "ffn_hidden" ? &f.ffn_hidden
                        : key == "gelu_out"   ? &f.gelu_out
                        : key == "ffn_out"    ? &f.ffn_out
                        : key == "weight"     ? &f.weight
                                              : nullptr;
        if (!slot) fail(Errc::kConfig, k + ": unknown key");
        *slot = detail::config_format(node, k);
      } else if (section == "weights") {
        if (key == "seed") cfg.weight_seed = detail::config_value<uint64_t>(node, k);
        else if (key == "raw_range") cfg.weight_raw_range = detail::config_value<int64_t>(node, k);
        else if (std::find(kWeightNames.begin(), kWeightNames.end(), key) != kWeightNames.end()) {
          std::string path = node.data();
          if (!base_dir.empty() && !path.empty() && path.front() != '/')
            path = base_dir + "/" + path;
          cfg.weight_files[key] = path;
        } else fail(Errc::kConfig, k + ": unknown key");
      } else {
        fail(Errc::kConfig, section + ": unknown section");
      }
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(Errc::kConfig, std::string("config: ") + e.what());
  }
  return cfg;
}

inline EncoderConfig load_encoder_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIo, "cannot open config " + path);
  const auto slash = path.find_last_of('/');
  return parse_encoder_config(in, slash == std::string::npos ? "" : path.substr(0, slash));
}

}  // namespace qfx

#endif  // QFX_PROFILE_HPP_
