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

#include <string>
#include <vector>

#include "fedhkd/rng.hpp"
#include "fedhkd/tensor.hpp"

namespace fedhkd {

enum class LayerKind { kDense, kRelu, kBatchNorm };

enum class Mode { kTrain, kEval };

std::string layer_kind_name(LayerKind kind);

// One network layer as a tagged record. Only the fields relevant to `kind`
// are populated:
//   dense:     weight (in, out), bias (out)
//   relu:      no parameters
//   batchnorm: scale/shift/running_mean/running_var (dim), momentum, epsilon
struct Layer {
  LayerKind kind = LayerKind::kRelu;

  Tensor weight;
  Tensor bias;

  Tensor scale;
  Tensor shift;
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  static Layer dense(std::size_t in_dim, std::size_t out_dim);
  static Layer dense_init(std::size_t in_dim, std::size_t out_dim, Rng& rng);
  static Layer relu();
  static Layer batchnorm(std::size_t dim, double momentum = 0.1,
                         double epsilon = 1e-5);

  // Tensors updated by the optimizer (dense: weight, bias; batchnorm: scale,
  // shift). Running statistics are state, not trainable parameters.
  std::vector<Tensor*> trainable_params();
  std::vector<const Tensor*> trainable_params() const;

  // Every tensor the layer owns, in a fixed order; used by model aggregation
  // and checkpointing (running statistics included).
  std::vector<Tensor*> all_tensors();
  std::vector<const Tensor*> all_tensors() const;

  std::size_t output_dim(std::size_t input_dim) const;
};

// Forward record consumed by layer_backward. Produced only by train-mode
// forward calls.
struct LayerCache {
  LayerKind kind = LayerKind::kRelu;
  bool train = false;
  Tensor input;       // dense, relu
  Tensor normalized;  // batchnorm: (x - mean) * inv_std
  Tensor centered;    // batchnorm: x - mean
  Tensor inv_std;     // batchnorm: per-feature 1/sqrt(var + eps)
};

struct LayerGrads {
  // Aligned with Layer::trainable_params() order; empty for relu.
  std::vector<Tensor> grads;
};

// Train-mode forward; batchnorm updates the layer's running statistics in
// place and requires batch >= 2. The returned cache feeds layer_backward.
std::pair<Tensor, LayerCache> layer_forward(Layer& layer, const Tensor& input,
                                            Mode mode);

// Eval-mode forward; never mutates the layer.
Tensor layer_forward(const Layer& layer, const Tensor& input);

// Backward through a train-mode cache. Returns the gradient with respect to
// the layer input and fills `param_grads` (if non-null) with gradients for
// each trainable parameter.
Tensor layer_backward(const Layer& layer, const LayerCache& cache,
                      const Tensor& output_grad, LayerGrads* param_grads);

// Stack helpers used by the split model.
Tensor forward_stack(std::vector<Layer>& layers, Tensor input, Mode mode,
                     std::vector<LayerCache>* caches);
Tensor forward_stack(const std::vector<Layer>& layers, Tensor input);
Tensor backward_stack(const std::vector<Layer>& layers,
                      const std::vector<LayerCache>& caches, Tensor grad,
                      std::vector<LayerGrads>* param_grads);

}  // namespace fedhkd
