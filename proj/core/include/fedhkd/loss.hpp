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

#include <cstddef>
#include <vector>

#include "fedhkd/tensor.hpp"

namespace fedhkd {

// Row-wise softmax with max-subtraction; accepts rank-1 (one row) or rank-2
// (batch) input and returns the same shape.
Tensor softmax(const Tensor& logits);

struct CrossEntropyResult {
  double loss = 0.0;
  Tensor logit_grad;  // gradient of the batch-mean loss w.r.t. the logits
};

// Mean negative log-likelihood over the batch. `probs` are softmax outputs
// (rows on the simplex); the returned gradient is the usual softmax +
// cross-entropy gradient with respect to the logits, (p - onehot) / batch.
CrossEntropyResult cross_entropy(const Tensor& probs,
                                 const std::vector<std::size_t>& labels);

std::size_t argmax_row(std::span<const double> row);

}  // namespace fedhkd
