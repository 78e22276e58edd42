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

#include "fedhkd/hyperknowledge.hpp"

#include <cmath>

#include <json.hpp>

#include "fedhkd/error.hpp"

namespace fedhkd {

bool GlobalHyperKnowledge::has_any() const {
  for (const auto& entry : classes)
    if (entry.has_value()) return true;
  return false;
}

std::size_t GlobalHyperKnowledge::present_count() const {
  std::size_t n = 0;
  for (const auto& entry : classes)
    if (entry.has_value()) ++n;
  return n;
}

LocalHyperKnowledge compute_local_hk(const SplitModel& model,
                                     const Dataset& train, double threshold,
                                     double temperature, double zeta) {
  train.check();
  if (train.size() == 0) throw Error("compute_local_hk: empty training set");
  if (threshold < 0.0 || threshold >= 1.0)
    throw Error("compute_local_hk: threshold must lie in [0, 1)");

  // Eval-mode inference over the whole local set; soft predictions use the
  // model's actual (unclipped) representations, clipping applies only to the
  // means that will be privatized.
  const Tensor h = extract(model, train.inputs);
  const Tensor z = classify(model, h);
  const Tensor q = soft_target(z, temperature);
  const Tensor h_clipped = clip_representation(h, zeta);

  const std::size_t repr_dim = h.cols();
  const std::size_t classes = q.cols();
  const double total = static_cast<double>(train.size());

  LocalHyperKnowledge out;
  for (std::size_t j = 0; j < train.class_count; ++j) {
    std::size_t count = 0;
    Tensor mean_repr({repr_dim});
    Tensor mean_soft({classes});
    for (std::size_t r = 0; r < train.size(); ++r) {
      if (train.labels[r] != j) continue;
      ++count;
      const auto hrow = h_clipped.row_span(r);
      const auto qrow = q.row_span(r);
      for (std::size_t d = 0; d < repr_dim; ++d) mean_repr[d] += hrow[d];
      for (std::size_t c = 0; c < classes; ++c) mean_soft[c] += qrow[c];
    }
    if (count == 0) continue;
    if (static_cast<double>(count) / total < threshold) continue;
    for (auto& v : mean_repr.values()) v /= static_cast<double>(count);
    for (auto& v : mean_soft.values()) v /= static_cast<double>(count);
    out.emplace(j, ClassHyperKnowledge{j, std::move(mean_repr),
                                       std::move(mean_soft), count});
  }
  return out;
}

double sensitivity(double zeta, std::size_t count) {
  if (zeta <= 0.0) throw Error("sensitivity: zeta must be positive");
  if (count == 0) throw Error("sensitivity: count must be at least 1");
  return 2.0 * zeta / static_cast<double>(count);
}

double min_sigma(double epsilon, double delta) {
  if (epsilon <= 0.0) throw Error("min_sigma: epsilon must be positive");
  if (delta <= 0.0 || delta >= 1.0)
    throw Error("min_sigma: delta must lie in (0, 1)");
  return std::sqrt(2.0 * std::log(5.0 / (4.0 * delta))) / epsilon;
}

ClassHyperKnowledge privatize(ClassHyperKnowledge hk, const DpConfig& dp,
                              Rng& rng) {
  if (!dp.enabled || dp.sigma == 0.0) return hk;
  const double noise_std = sensitivity(dp.zeta, hk.count) * dp.sigma;
  for (auto& v : hk.mean_repr.values()) v += rng.next_normal(0.0, noise_std);
  return hk;
}

GlobalHyperKnowledge aggregate_hk(
    const std::vector<std::pair<std::size_t, LocalHyperKnowledge>>&
        contributions,
    std::size_t class_count, std::size_t round) {
  GlobalHyperKnowledge out;
  out.round = round;
  out.classes.assign(class_count, std::nullopt);

  for (std::size_t j = 0; j < class_count; ++j) {
    // First pass: total sample count over the clients that shared class j.
    std::size_t total = 0;
    for (const auto& [client, hk] : contributions) {
      const auto it = hk.find(j);
      if (it != hk.end()) total += it->second.count;
    }
    if (total == 0) continue;

    std::optional<GlobalClassKnowledge> entry;
    for (const auto& [client, hk] : contributions) {
      const auto it = hk.find(j);
      if (it == hk.end()) continue;
      const auto& chk = it->second;
      const double weight =
          static_cast<double>(chk.count) / static_cast<double>(total);
      if (!entry) {
        entry = GlobalClassKnowledge{Tensor::zeros_like(chk.mean_repr),
                                     Tensor::zeros_like(chk.mean_soft)};
      }
      axpy(weight, chk.mean_repr, entry->repr);
      axpy(weight, chk.mean_soft, entry->soft);
    }
    out.classes[j] = std::move(entry);
  }
  return out;
}

std::string hk_to_json(const GlobalHyperKnowledge& hk) {
  nlohmann::json doc;
  doc["round"] = hk.round;
  doc["classes"] = nlohmann::json::array();
  for (std::size_t j = 0; j < hk.classes.size(); ++j) {
    nlohmann::json entry;
    entry["j"] = j;
    entry["present"] = hk.classes[j].has_value();
    if (hk.classes[j]) {
      entry["H"] = hk.classes[j]->repr.values();
      entry["Q"] = hk.classes[j]->soft.values();
    } else {
      entry["H"] = nlohmann::json::array();
      entry["Q"] = nlohmann::json::array();
    }
    doc["classes"].push_back(std::move(entry));
  }
  return doc.dump(2);
}

}  // namespace fedhkd
