//
// Copyright 2026 The fedhkd Authors
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
//

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedhkd/tensor.hpp"

namespace fedhkd {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates per parameter tensor plus the step counter.
struct AdamState {
  AdamState() = default;
  explicit AdamState(std::span<Tensor* const> params);

  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
};

// Bias-corrected Adam update of all parameters in place; increments the step
// counter by exactly one. Deterministic: identical inputs give identical bits.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state, const AdamConfig& config);

}  // namespace fedhkd
