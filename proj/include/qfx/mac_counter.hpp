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

#ifndef QFX_MAC_COUNTER_HPP_
#define QFX_MAC_COUNTER_HPP_

#include <atomic>
#include <cstdint>

namespace qfx {

// Process-wide count of multiplies performed by kernels. Kernels count
// locally at the multiply site and publish once per call.
inline std::atomic<uint64_t>& mac_counter() {
  static std::atomic<uint64_t> counter{0};
  return counter;
}

inline void publish_macs(uint64_t n) {
  mac_counter().fetch_add(n, std::memory_order_relaxed);
}

}  // namespace qfx

#endif  // QFX_MAC_COUNTER_HPP_
