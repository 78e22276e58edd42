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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedhkd/data.hpp"
#include "fedhkd/model.hpp"
#include "fedhkd/rng.hpp"
#include "fedhkd/tensor.hpp"

namespace fedhkd {

// Per-class knowledge a client shares: the mean (clipped) representation of
// its class-j samples, the mean temperature-softened prediction, and how many
// samples produced them.
struct ClassHyperKnowledge {
  std::size_t label = 0;
  Tensor mean_repr;  // (repr_dim)
  Tensor mean_soft;  // (classes), on the probability simplex
  std::size_t count = 0;
};

// Ordered by class so every aggregation below iterates deterministically.
using LocalHyperKnowledge = std::map<std::size_t, ClassHyperKnowledge>;

struct GlobalClassKnowledge {
  Tensor repr;  // (repr_dim)
  Tensor soft;  // (classes)
};

// Class-indexed table of aggregated knowledge. A disengaged entry means no
// participating client shared that class this round.
struct GlobalHyperKnowledge {
  std::size_t round = 0;
  std::vector<std::optional<GlobalClassKnowledge>> classes;

  bool has_any() const;
  std::size_t present_count() const;
};

struct DpConfig {
  bool enabled = true;
  double zeta = 3.0;    // hard bound on each representation element
  double sigma = 7.0;   // noise multiplier
  double epsilon = 0.5; // privacy budget (reporting only)
  double delta = 0.01;  // privacy failure probability (reporting only)
};

// Mean representation and mean soft prediction per class, computed with the
// model in eval mode. Classes whose share of the training set is below
// `threshold` are withheld. Representations are clamped into [-zeta, zeta]
// before averaging so the sensitivity bound below holds exactly.
LocalHyperKnowledge compute_local_hk(const SplitModel& model,
                                     const Dataset& train, double threshold,
                                     double temperature, double zeta);

// Sensitivity of the per-element class mean under removal of one sample when
// every element is bounded by zeta: 2*zeta / count.
double sensitivity(double zeta, std::size_t count);

// Smallest noise multiplier giving (epsilon, delta)-differential privacy for
// the Gaussian mechanism: sqrt(2 * ln(5 / (4*delta))) / epsilon.
double min_sigma(double epsilon, double delta);

// Adds i.i.d. Gaussian noise with standard deviation sensitivity * sigma to
// each element of the mean representation. Soft predictions are not noised.
ClassHyperKnowledge privatize(ClassHyperKnowledge hk, const DpConfig& dp,
                              Rng& rng);

// Weighted aggregation of client contributions per class. Weights are the
// per-class sample counts normalized over the clients that actually shared
// the class; classes nobody shared stay absent.
GlobalHyperKnowledge aggregate_hk(
    const std::vector<std::pair<std::size_t, LocalHyperKnowledge>>&
        contributions,
    std::size_t class_count, std::size_t round);

// JSON snapshot: {"round": t, "classes": [{"j", "present", "H", "Q"}, ...]}.
std::string hk_to_json(const GlobalHyperKnowledge& hk);

}  // namespace fedhkd
