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

#include "fedhkd/model.hpp"

#include <algorithm>

#include "fedhkd/error.hpp"
#include "fedhkd/loss.hpp"

namespace fedhkd {

namespace {

template <typename LayerVec, typename TensorPtr, typename Getter>
void append_tensors(LayerVec& layers, Getter getter,
                    std::vector<TensorPtr>& out) {
  for (auto& layer : layers)
    for (auto* t : getter(layer)) out.push_back(t);
}

}  // namespace

std::size_t SplitModel::repr_dim() const {
  if (classifier.empty() || classifier.front().kind != LayerKind::kDense)
    throw Error("SplitModel::repr_dim: classifier must start with dense");
  return classifier.front().weight.dim(0);
}

std::size_t SplitModel::class_count() const {
  if (classifier.empty() || classifier.back().kind != LayerKind::kDense)
    throw Error("SplitModel::class_count: classifier must end with dense");
  return classifier.back().weight.dim(1);
}

std::vector<Tensor*> SplitModel::trainable_params() {
  std::vector<Tensor*> out;
  auto getter = [](Layer& l) { return l.trainable_params(); };
  append_tensors(extractor, getter, out);
  append_tensors(classifier, getter, out);
  return out;
}

std::vector<const Tensor*> SplitModel::trainable_params() const {
  std::vector<const Tensor*> out;
  auto getter = [](const Layer& l) { return l.trainable_params(); };
  append_tensors(extractor, getter, out);
  append_tensors(classifier, getter, out);
  return out;
}

std::vector<Tensor*> SplitModel::all_tensors() {
  std::vector<Tensor*> out;
  auto getter = [](Layer& l) { return l.all_tensors(); };
  append_tensors(extractor, getter, out);
  append_tensors(classifier, getter, out);
  return out;
}

std::vector<const Tensor*> SplitModel::all_tensors() const {
  std::vector<const Tensor*> out;
  auto getter = [](const Layer& l) { return l.all_tensors(); };
  append_tensors(extractor, getter, out);
  append_tensors(classifier, getter, out);
  return out;
}

bool SplitModel::same_architecture(const SplitModel& other) const {
  if (extractor.size() != other.extractor.size() ||
      classifier.size() != other.classifier.size())
    return false;
  const auto a = all_tensors();
  const auto b = other.all_tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]->shape() != b[i]->shape()) return false;
  return true;
}

bool SplitModel::params_equal(const SplitModel& other) const {
  if (!same_architecture(other)) return false;
  const auto a = all_tensors();
  const auto b = other.all_tensors();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]->values() != b[i]->values()) return false;
  return true;
}

SplitModel make_mlp_model(std::size_t input_dim, std::size_t hidden_dim,
                          std::size_t repr_dim, std::size_t classes,
                          Rng& rng) {
  SplitModel model;
  model.extractor.push_back(Layer::dense_init(input_dim, hidden_dim, rng));
  model.extractor.push_back(Layer::relu());
  model.extractor.push_back(Layer::dense_init(hidden_dim, repr_dim, rng));
  model.extractor.push_back(Layer::batchnorm(repr_dim));
  model.classifier.push_back(Layer::dense_init(repr_dim, classes, rng));
  validate_experiment_model(model);
  return model;
}

void validate_experiment_model(const SplitModel& model) {
  if (model.extractor.empty() || model.classifier.empty())
    throw Error("SplitModel: extractor and classifier must be nonempty");
  if (model.extractor.back().kind != LayerKind::kBatchNorm)
    throw Error("SplitModel: extractor must end in a batchnorm layer");
  if (model.classifier.back().kind != LayerKind::kDense)
    throw Error("SplitModel: classifier must end in a dense layer");
  const std::size_t bn_dim = model.extractor.back().scale.dim(0);
  if (bn_dim != model.repr_dim())
    throw ShapeError("SplitModel: extractor output dim " +
                     std::to_string(bn_dim) +
                     " does not match classifier input dim " +
                     std::to_string(model.repr_dim()));
}

Tensor extract(const SplitModel& model, const Tensor& x) {
  return forward_stack(model.extractor, x);
}

Tensor extract_train(SplitModel& model, const Tensor& x,
                     std::vector<LayerCache>* caches) {
  return forward_stack(model.extractor, x, Mode::kTrain, caches);
}

Tensor classify(const SplitModel& model, const Tensor& h) {
  return forward_stack(model.classifier, h);
}

Tensor classify_train(SplitModel& model, const Tensor& h,
                      std::vector<LayerCache>* caches) {
  return forward_stack(model.classifier, h, Mode::kTrain, caches);
}

Tensor soft_target(const Tensor& logits, double temperature) {
  if (temperature <= 0.0)
    throw Error("soft_target: temperature must be positive, got " +
                std::to_string(temperature));
  Tensor scaled = logits;
  for (auto& v : scaled.values()) v /= temperature;
  return softmax(scaled);
}

Tensor clip_representation(Tensor h, double bound) {
  if (bound <= 0.0)
    throw Error("clip_representation: bound must be positive, got " +
                std::to_string(bound));
  for (auto& v : h.values()) v = std::clamp(v, -bound, bound);
  return h;
}

}  // namespace fedhkd
