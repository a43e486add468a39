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

#ifndef QFX_QFX_HPP_
#define QFX_QFX_HPP_

#include "qfx/activation.hpp"
#include "qfx/encoder.hpp"
#include "qfx/error.hpp"
#include "qfx/fp8.hpp"
#include "qfx/gather.hpp"
#include "qfx/layernorm.hpp"
#include "qfx/mac_counter.hpp"
#include "qfx/matmul.hpp"
#include "qfx/oracle.hpp"
#include "qfx/parallel.hpp"
#include "qfx/pow2.hpp"
#include "qfx/profile.hpp"
#include "qfx/qformat.hpp"
#include "qfx/qten.hpp"
#include "qfx/quant.hpp"
#include "qfx/random.hpp"
#include "qfx/reorg.hpp"
#include "qfx/softmax.hpp"
#include "qfx/tensor.hpp"

#endif  // QFX_QFX_HPP_
