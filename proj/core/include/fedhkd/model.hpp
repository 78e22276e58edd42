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
#include <vector>

#include "fedhkd/layers.hpp"
#include "fedhkd/rng.hpp"
#include "fedhkd/tensor.hpp"

namespace fedhkd {

// Classification network split into a feature extractor (raw input ->
// representation of dimension repr_dim) and a classifier (representation ->
// logits). The two halves exchange knowledge independently, so they are kept
// as separate layer stacks.
struct SplitModel {
  std::vector<Layer> extractor;
  std::vector<Layer> classifier;

  std::size_t repr_dim() const;
  std::size_t class_count() const;

  std::vector<Tensor*> trainable_params();
  std::vector<const Tensor*> trainable_params() const;
  std::vector<Tensor*> all_tensors();
  std::vector<const Tensor*> all_tensors() const;

  bool same_architecture(const SplitModel& other) const;
  bool params_equal(const SplitModel& other) const;
};

// Default experiment architecture:
//   extractor: dense(input, hidden) + relu + dense(hidden, repr) + batchnorm
//   classifier: dense(repr, classes)
// The trailing batchnorm keeps representations standardized, which is what
// makes the clip bound rarely binding in practice.
SplitModel make_mlp_model(std::size_t input_dim, std::size_t hidden_dim,
                          std::size_t repr_dim, std::size_t classes, Rng& rng);

// Checks the experiment-model invariants (extractor ends in batchnorm whose
// width matches the classifier input). Test fixtures may build looser models
// directly from layers.
void validate_experiment_model(const SplitModel& model);

// Eval-mode representation extraction; pure function of (model, x).
Tensor extract(const SplitModel& model, const Tensor& x);

// Train-mode extraction; updates batchnorm running statistics and fills
// caches for backpropagation.
Tensor extract_train(SplitModel& model, const Tensor& x,
                     std::vector<LayerCache>* caches);

// Eval-mode logits for a batch of representations; pure.
Tensor classify(const SplitModel& model, const Tensor& h);

Tensor classify_train(SplitModel& model, const Tensor& h,
                      std::vector<LayerCache>* caches);

// Temperature-scaled softmax: row i maps to softmax(z_i / temperature).
// Temperature must be positive; 1 reduces to plain softmax.
Tensor soft_target(const Tensor& logits, double temperature);

// Clamps every element into [-bound, bound]; elements in range are unchanged.
Tensor clip_representation(Tensor h, double bound);

}  // namespace fedhkd
