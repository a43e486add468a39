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


// Runs the default encoder in fixed and real arithmetic, prints the trace and
// the end-to-end error.

#include <iostream>

#include "qfx/qfx.hpp"

int main(int argc, char** argv) {
  qfx::EncoderConfig cfg;
  if (argc > 1) cfg = qfx::load_encoder_config(argv[1]);
  const auto w = qfx::make_weights(cfg);
  const auto x = qfx::make_input(cfg);

  auto [y, trace] = qfx::encoder_forward(x, cfg, w);
  auto [golden, unused] = qfx::encoder_forward_real(qfx::dequantize(x), cfg, w);
  (void)unused;

  qfx::write_trace_csv(std::cout, trace);
  const auto err = qfx::compare(y, golden);
  std::cerr << "matmul share " << qfx::format_fixed(100.0 * trace.matmul_share(), 2)
            << "%, fixed vs real mean error " << qfx::format_fixed(err.mean_rel_err_pct, 3)
            << "%\n";
}
