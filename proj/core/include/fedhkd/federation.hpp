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
#include <string>
#include <vector>

#include "fedhkd/adam.hpp"
#include "fedhkd/data.hpp"
#include "fedhkd/hyperknowledge.hpp"
#include "fedhkd/model.hpp"

namespace fedhkd {

enum class AlgoKind { kFedAvg, kFedProx, kFedProto, kFedHkd, kFedHkdStar };

std::string algo_name(AlgoKind kind);
AlgoKind algo_from_name(const std::string& name);

// Which objective a client minimizes. The five algorithms are variants of one
// three-term loss:
//   fedavg:      cross-entropy only
//   fedprox:     cross-entropy + (mu_prox/2)*||theta - theta_global||^2
//   fedproto:    cross-entropy + lambda_proto * mean_k ||R(x_k) - H^{y_k}||
//   fedhkd:      cross-entropy + lambda * classifier alignment
//                              + gamma * representation alignment
//   fedhkd_star: fedhkd with gamma = 0 (no representation alignment)
struct AlgoSpec {
  AlgoKind kind = AlgoKind::kFedHkd;
  double lambda = 0.05;
  double gamma = 0.05;
  double mu_prox = 0.5;
  double lambda_proto = 0.05;

  bool shares_hyper_knowledge() const;
  double distill_coefficient() const;    // lambda term, zero when unused
  double prototype_coefficient() const;  // gamma / lambda_proto term
  AlgoSpec normalized() const;  // zeroes coefficients foreign to the kind
  void validate() const;
};

struct FederationConfig {
  AlgoSpec algo;
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  double participation = 1.0;
  DpConfig dp;
  double share_threshold = 0.25;  // minimum class fraction for sharing
  double temperature = 0.5;
  AdamConfig adam;
  double lr_decay_factor = 0.5;
  std::size_t lr_decay_rounds = 10;
  // When true, the classifier-alignment term divides by the total class
  // count; by default it divides by the number of classes actually present
  // in the global knowledge.
  bool term2_all_classes = false;
  std::size_t workers = 1;
};

// Learning rate applied during round `round` (1-based): the initial rate
// halved (by lr_decay_factor) every lr_decay_rounds rounds.
double effective_lr(const FederationConfig& config, std::size_t round);

struct ClientUpdate {
  std::size_t client_id = 0;
  SplitModel model;
  LocalHyperKnowledge hyper_knowledge;
  std::size_t sample_count = 0;
  double mean_train_loss = 0.0;
};

struct FederationState {
  SplitModel global_model;
  std::vector<SplitModel> client_models;  // personalized models, one/client
  GlobalHyperKnowledge knowledge;
  std::size_t round = 0;
  std::uint64_t root_seed = 0;
  double last_round_train_loss = 0.0;
};

FederationState init_federation(SplitModel initial_model,
                                std::size_t client_count,
                                std::uint64_t root_seed);

struct LossResult {
  double loss = 0.0;
  std::vector<Tensor> grads;  // aligned with model.trainable_params()
};

// Full local objective with gradients for every variant. The model runs in
// train mode (batchnorm running statistics advance); the global knowledge
// enters as a constant. `global_snapshot` is required for fedprox only.
LossResult local_loss(const AlgoSpec& algo, SplitModel& model, const Tensor& x,
                      const std::vector<std::size_t>& labels,
                      const GlobalHyperKnowledge& knowledge, double temperature,
                      const SplitModel* global_snapshot,
                      bool term2_all_classes = false);

// One client's round: clone the start model, run `epochs` of seeded-shuffled
// mini-batch Adam on the local objective, then extract and privatize the
// local hyper-knowledge from the trained model.
ClientUpdate local_update(const SplitModel& start_model,
                          const GlobalHyperKnowledge& knowledge,
                          const Dataset& train, const FederationConfig& config,
                          double lr, std::size_t client_id,
                          std::uint64_t shuffle_seed, std::uint64_t dp_seed);

// Sample-count-weighted elementwise average of client models (running
// statistics included). Equal counts give the uniform average.
SplitModel aggregate_models(const std::vector<ClientUpdate>& updates);

// floor(m * participation) distinct clients, uniformly without replacement.
std::vector<std::size_t> select_clients(std::size_t client_count,
                                        double participation, Rng& rng);

// One server round: select a cohort, run local updates (possibly on several
// workers; results are byte-identical regardless), aggregate the model and
// the hyper-knowledge, and advance the round counter.
FederationState run_round(const FederationState& state,
                          const std::vector<Dataset>& client_train,
                          const FederationConfig& config);

// Fraction of samples whose argmax logit matches the label (eval mode).
double evaluate(const SplitModel& model, const Dataset& dataset);

// Mean eval-mode cross-entropy of the model on a dataset; used for the
// round-zero loss report.
double evaluate_loss(const SplitModel& model, const Dataset& dataset);

}  // namespace fedhkd
