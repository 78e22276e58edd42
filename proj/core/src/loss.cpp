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

#include "fedhkd/loss.hpp"

#include <algorithm>
#include <cmath>

#include "fedhkd/error.hpp"

namespace fedhkd {

namespace {

void softmax_row(std::span<const double> in, std::span<double> out) {
  double max_v = in[0];
  for (double v : in) max_v = std::max(max_v, v);
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - max_v);
    total += out[i];
  }
  for (auto& v : out) v /= total;
}

}  // namespace

Tensor softmax(const Tensor& logits) {
  if (!logits.all_finite()) throw Error("softmax: non-finite input");
  Tensor out = logits;
  if (logits.rank() == 1) {
    softmax_row(std::span<const double>(logits.values()),
                std::span<double>(out.values()));
    return out;
  }
  if (logits.rank() != 2)
    throw ShapeError("softmax: expected rank-1 or rank-2 input, got " +
                     logits.shape_str());
  for (std::size_t r = 0; r < logits.rows(); ++r)
    softmax_row(logits.row_span(r), out.row_span(r));
  return out;
}

CrossEntropyResult cross_entropy(const Tensor& probs,
                                 const std::vector<std::size_t>& labels) {
  if (probs.rank() != 2)
    throw ShapeError("cross_entropy: probs must be (batch, classes), got " +
                     probs.shape_str());
  const std::size_t batch = probs.rows();
  const std::size_t classes = probs.cols();
  if (labels.size() != batch)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(batch));

  CrossEntropyResult result;
  result.logit_grad = probs;
  auto& grad = result.logit_grad;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    if (labels[r] >= classes)
      throw Error("cross_entropy: label " + std::to_string(labels[r]) +
                  " out of range for " + std::to_string(classes) + " classes");
    // Clamp keeps -log finite when a probability underflows to zero.
    const double p = std::max(probs.at(r, labels[r]), 1e-300);
    result.loss -= std::log(p);
    grad.at(r, labels[r]) -= 1.0;
  }
  result.loss *= inv_batch;
  for (auto& g : grad.values()) g *= inv_batch;
  return result;
}

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

}  // namespace fedhkd
