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

#include "fedhkd/config.hpp"
#include "fedhkd/metrics.hpp"

namespace fedhkd {

// Everything one seed of an experiment trains and evaluates on.
struct SeedData {
  std::vector<Dataset> train;  // per-client local training sets
  std::vector<Dataset> test;   // per-client local test sets (same skew)
  Dataset global_test;         // class-balanced, shared by all clients
};

// Deterministic data pipeline: synthesize or load, partition across clients
// with the Dirichlet split, then cut each client 75/25 stratified.
SeedData build_seed_data(const ExperimentConfig& config, std::uint64_t seed);

// Fresh experiment model for this seed (same for every algorithm).
SplitModel build_seed_model(const ExperimentConfig& config,
                            std::size_t input_dim, std::size_t classes,
                            std::uint64_t seed);

struct SeedRun {
  std::vector<RoundMetrics> rows;  // round 0 evaluation plus one row/round
  FederationState state;
};

// Runs min(round_limit, config.rounds) rounds for one seed.
SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed,
                 std::size_t round_limit);

// Runs every configured seed, writes metrics.csv / metrics.json into
// config.out_dir, and returns all rows.
std::vector<RoundMetrics> run_experiment(const ExperimentConfig& config);

}  // namespace fedhkd
