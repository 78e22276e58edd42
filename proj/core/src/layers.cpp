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

#include "fedhkd/layers.hpp"

#include <cmath>

#include "fedhkd/error.hpp"

namespace fedhkd {

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kBatchNorm: return "batchnorm";
  }
  return "unknown";
}

Layer Layer::dense(std::size_t in_dim, std::size_t out_dim) {
  Layer l;
  l.kind = LayerKind::kDense;
  l.weight = Tensor({in_dim, out_dim});
  l.bias = Tensor({out_dim});
  return l;
}

Layer Layer::dense_init(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  Layer l = dense(in_dim, out_dim);
  // Glorot-uniform fan-in/fan-out scaling.
  const double bound =
      std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (auto& w : l.weight.values())
    w = (2.0 * rng.next_unit() - 1.0) * bound;
  return l;
}

Layer Layer::relu() {
  Layer l;
  l.kind = LayerKind::kRelu;
  return l;
}

Layer Layer::batchnorm(std::size_t dim, double momentum, double epsilon) {
  Layer l;
  l.kind = LayerKind::kBatchNorm;
  l.scale = Tensor::full({dim}, 1.0);
  l.shift = Tensor({dim});
  l.running_mean = Tensor({dim});
  l.running_var = Tensor::full({dim}, 1.0);
  l.momentum = momentum;
  l.epsilon = epsilon;
  return l;
}

std::vector<Tensor*> Layer::trainable_params() {
  switch (kind) {
    case LayerKind::kDense: return {&weight, &bias};
    case LayerKind::kRelu: return {};
    case LayerKind::kBatchNorm: return {&scale, &shift};
  }
  return {};
}

std::vector<const Tensor*> Layer::trainable_params() const {
  switch (kind) {
    case LayerKind::kDense: return {&weight, &bias};
    case LayerKind::kRelu: return {};
    case LayerKind::kBatchNorm: return {&scale, &shift};
  }
  return {};
}

std::vector<Tensor*> Layer::all_tensors() {
  switch (kind) {
    case LayerKind::kDense: return {&weight, &bias};
    case LayerKind::kRelu: return {};
    case LayerKind::kBatchNorm:
      return {&scale, &shift, &running_mean, &running_var};
  }
  return {};
}

std::vector<const Tensor*> Layer::all_tensors() const {
  switch (kind) {
    case LayerKind::kDense: return {&weight, &bias};
    case LayerKind::kRelu: return {};
    case LayerKind::kBatchNorm:
      return {&scale, &shift, &running_mean, &running_var};
  }
  return {};
}

std::size_t Layer::output_dim(std::size_t input_dim) const {
  switch (kind) {
    case LayerKind::kDense: return weight.dim(1);
    case LayerKind::kRelu: return input_dim;
    case LayerKind::kBatchNorm: return scale.dim(0);
  }
  return input_dim;
}

namespace {

void check_input(const Layer& layer, const Tensor& input) {
  if (input.rank() != 2 || input.rows() < 1)
    throw ShapeError("layer_forward(" + layer_kind_name(layer.kind) +
                     "): input must be a (batch, features) matrix, got " +
                     input.shape_str());
  const std::size_t features = input.cols();
  switch (layer.kind) {
    case LayerKind::kDense:
      if (features != layer.weight.dim(0))
        throw ShapeError("layer_forward(dense): expected input dim " +
                         std::to_string(layer.weight.dim(0)) + ", got " +
                         input.shape_str());
      break;
    case LayerKind::kRelu:
      break;
    case LayerKind::kBatchNorm:
      if (features != layer.scale.dim(0))
        throw ShapeError("layer_forward(batchnorm): expected input dim " +
                         std::to_string(layer.scale.dim(0)) + ", got " +
                         input.shape_str());
      break;
  }
}

Tensor dense_forward(const Layer& layer, const Tensor& input) {
  Tensor out = matmul(input, layer.weight);
  add_row_vector(out, layer.bias);
  return out;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (auto& v : out.values())
    if (v < 0.0) v = 0.0;
  return out;
}

// Standardizes each feature with the batch mean and the population (biased)
// variance, then applies scale and shift. Train mode also refreshes the
// running statistics with an exponential moving average via `stats_update`.
Tensor batchnorm_forward(const Layer& layer, const Tensor& input, Mode mode,
                         LayerCache* cache, Layer* stats_update) {
  const std::size_t batch = input.rows();
  const std::size_t dim = input.cols();
  if (mode == Mode::kTrain && batch < 2)
    throw Error("layer_forward(batchnorm): train mode requires batch >= 2");

  Tensor mean({dim});
  Tensor var({dim});
  if (mode == Mode::kTrain) {
    for (std::size_t r = 0; r < batch; ++r) {
      const auto row = input.row_span(r);
      for (std::size_t c = 0; c < dim; ++c) mean[c] += row[c];
    }
    for (std::size_t c = 0; c < dim; ++c) mean[c] /= static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
      const auto row = input.row_span(r);
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = row[c] - mean[c];
        var[c] += d * d;
      }
    }
    for (std::size_t c = 0; c < dim; ++c) var[c] /= static_cast<double>(batch);
    if (stats_update) {
      for (std::size_t c = 0; c < dim; ++c) {
        stats_update->running_mean[c] =
            (1.0 - layer.momentum) * layer.running_mean[c] +
            layer.momentum * mean[c];
        stats_update->running_var[c] =
            (1.0 - layer.momentum) * layer.running_var[c] +
            layer.momentum * var[c];
      }
    }
  } else {
    mean = layer.running_mean;
    var = layer.running_var;
  }

  Tensor inv_std({dim});
  for (std::size_t c = 0; c < dim; ++c)
    inv_std[c] = 1.0 / std::sqrt(var[c] + layer.epsilon);

  Tensor out({batch, dim});
  Tensor normalized({batch, dim});
  Tensor centered({batch, dim});
  for (std::size_t r = 0; r < batch; ++r) {
    const auto in_row = input.row_span(r);
    auto out_row = out.row_span(r);
    auto nrm_row = normalized.row_span(r);
    auto cen_row = centered.row_span(r);
    for (std::size_t c = 0; c < dim; ++c) {
      cen_row[c] = in_row[c] - mean[c];
      nrm_row[c] = cen_row[c] * inv_std[c];
      out_row[c] = layer.scale[c] * nrm_row[c] + layer.shift[c];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->centered = std::move(centered);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

}  // namespace

std::pair<Tensor, LayerCache> layer_forward(Layer& layer, const Tensor& input,
                                            Mode mode) {
  check_input(layer, input);
  LayerCache cache;
  cache.kind = layer.kind;
  cache.train = (mode == Mode::kTrain);
  Tensor out;
  switch (layer.kind) {
    case LayerKind::kDense:
      cache.input = input;
      out = dense_forward(layer, input);
      break;
    case LayerKind::kRelu:
      cache.input = input;
      out = relu_forward(input);
      break;
    case LayerKind::kBatchNorm:
      out = batchnorm_forward(layer, input, mode, &cache, &layer);
      break;
  }
  return {std::move(out), std::move(cache)};
}

Tensor layer_forward(const Layer& layer, const Tensor& input) {
  check_input(layer, input);
  switch (layer.kind) {
    case LayerKind::kDense: return dense_forward(layer, input);
    case LayerKind::kRelu: return relu_forward(input);
    case LayerKind::kBatchNorm:
      return batchnorm_forward(layer, input, Mode::kEval, nullptr, nullptr);
  }
  throw Error("layer_forward: unknown layer kind");
}

Tensor layer_backward(const Layer& layer, const LayerCache& cache,
                      const Tensor& output_grad, LayerGrads* param_grads) {
  if (cache.kind != layer.kind)
    throw Error("layer_backward(" + layer_kind_name(layer.kind) +
                "): cache was produced by a " + layer_kind_name(cache.kind) +
                " forward call");
  if (!cache.train)
    throw Error("layer_backward(" + layer_kind_name(layer.kind) +
                "): cache must come from a train-mode forward call");

  switch (layer.kind) {
    case LayerKind::kDense: {
      if (output_grad.rank() != 2 || output_grad.cols() != layer.weight.dim(1) ||
          output_grad.rows() != cache.input.rows())
        throw ShapeError("layer_backward(dense): output grad " +
                         output_grad.shape_str() + " does not match cache " +
                         cache.input.shape_str());
      if (param_grads) {
        param_grads->grads.clear();
        param_grads->grads.push_back(matmul_at_b(cache.input, output_grad));
        param_grads->grads.push_back(column_sums(output_grad));
      }
      return matmul_a_bt(output_grad, layer.weight);
    }
    case LayerKind::kRelu: {
      if (!output_grad.same_shape(cache.input))
        throw ShapeError("layer_backward(relu): output grad " +
                         output_grad.shape_str() + " does not match cache " +
                         cache.input.shape_str());
      Tensor grad_in = output_grad;
      const auto& xs = cache.input.values();
      auto& gs = grad_in.values();
      for (std::size_t i = 0; i < gs.size(); ++i)
        if (xs[i] <= 0.0) gs[i] = 0.0;
      if (param_grads) param_grads->grads.clear();
      return grad_in;
    }
    case LayerKind::kBatchNorm: {
      if (!output_grad.same_shape(cache.normalized))
        throw ShapeError("layer_backward(batchnorm): output grad " +
                         output_grad.shape_str() + " does not match cache " +
                         cache.normalized.shape_str());
      const std::size_t batch = output_grad.rows();
      const std::size_t dim = output_grad.cols();
      const double b = static_cast<double>(batch);

      Tensor grad_scale({dim});
      Tensor grad_shift({dim});
      // Per-feature reductions needed to differentiate through the batch
      // statistics: sum of dxhat and sum of dxhat * xhat.
      Tensor sum_dxhat({dim});
      Tensor sum_dxhat_xhat({dim});
      for (std::size_t r = 0; r < batch; ++r) {
        const auto g = output_grad.row_span(r);
        const auto nrm = cache.normalized.row_span(r);
        for (std::size_t c = 0; c < dim; ++c) {
          grad_shift[c] += g[c];
          grad_scale[c] += g[c] * nrm[c];
          const double dxhat = g[c] * layer.scale[c];
          sum_dxhat[c] += dxhat;
          sum_dxhat_xhat[c] += dxhat * nrm[c];
        }
      }

      Tensor grad_in({batch, dim});
      for (std::size_t r = 0; r < batch; ++r) {
        const auto g = output_grad.row_span(r);
        const auto nrm = cache.normalized.row_span(r);
        auto gi = grad_in.row_span(r);
        for (std::size_t c = 0; c < dim; ++c) {
          const double dxhat = g[c] * layer.scale[c];
          gi[c] = cache.inv_std[c] / b *
                  (b * dxhat - sum_dxhat[c] - nrm[c] * sum_dxhat_xhat[c]);
        }
      }
      if (param_grads) {
        param_grads->grads.clear();
        param_grads->grads.push_back(std::move(grad_scale));
        param_grads->grads.push_back(std::move(grad_shift));
      }
      return grad_in;
    }
  }
  throw Error("layer_backward: unknown layer kind");
}

Tensor forward_stack(std::vector<Layer>& layers, Tensor input, Mode mode,
                     std::vector<LayerCache>* caches) {
  if (caches) {
    caches->clear();
    caches->reserve(layers.size());
  }
  for (auto& layer : layers) {
    auto [out, cache] = layer_forward(layer, input, mode);
    input = std::move(out);
    if (caches) caches->push_back(std::move(cache));
  }
  return input;
}

Tensor forward_stack(const std::vector<Layer>& layers, Tensor input) {
  for (const auto& layer : layers) input = layer_forward(layer, input);
  return input;
}

Tensor backward_stack(const std::vector<Layer>& layers,
                      const std::vector<LayerCache>& caches, Tensor grad,
                      std::vector<LayerGrads>* param_grads) {
  if (caches.size() != layers.size())
    throw Error("backward_stack: cache count " +
                std::to_string(caches.size()) + " does not match layer count " +
                std::to_string(layers.size()));
  if (param_grads) param_grads->assign(layers.size(), LayerGrads{});
  for (std::size_t i = layers.size(); i > 0; --i) {
    const std::size_t idx = i - 1;
    grad = layer_backward(layers[idx], caches[idx], grad,
                          param_grads ? &(*param_grads)[idx] : nullptr);
  }
  return grad;
}

}  // namespace fedhkd
