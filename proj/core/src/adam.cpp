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

#include "fedhkd/adam.hpp"

#include <cmath>

#include "fedhkd/error.hpp"

namespace fedhkd {

AdamState::AdamState(std::span<Tensor* const> params) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const Tensor* p : params) {
    first_moment.push_back(Tensor::zeros_like(*p));
    second_moment.push_back(Tensor::zeros_like(*p));
  }
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size())
    throw Error("adam_step: parameter/gradient/state count mismatch");
  if (config.lr <= 0.0) throw Error("adam_step: learning rate must be > 0");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g))
      throw ShapeError("adam_step: gradient shape " + g.shape_str() +
                       " does not match parameter " + p.shape_str());
    auto& m = state.first_moment[i].values();
    auto& v = state.second_moment[i].values();
    auto& pv = p.values();
    const auto& gv = g.values();
    for (std::size_t k = 0; k < pv.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * gv[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * gv[k] * gv[k];
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      pv[k] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace fedhkd
