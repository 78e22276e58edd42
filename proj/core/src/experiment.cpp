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

#include "fedhkd/experiment.hpp"

#include <chrono>

#include "fedhkd/error.hpp"

namespace fedhkd {

namespace {

// Purpose tags for the per-seed random streams.
constexpr std::uint64_t kDataStream = 0xb10b5;
constexpr std::uint64_t kTestStream = 0x7e57;
constexpr std::uint64_t kPartitionStream = 0xd112;
constexpr std::uint64_t kSplitStream = 0x59717;
constexpr std::uint64_t kInitStream = 0x1217;

double mean_local_accuracy(const FederationState& state,
                           const std::vector<Dataset>& tests) {
  double total = 0.0;
  for (std::size_t i = 0; i < tests.size(); ++i)
    total += evaluate(state.client_models[i], tests[i]);
  return total / static_cast<double>(tests.size());
}

double mean_initial_loss(const FederationState& state,
                         const std::vector<Dataset>& trains) {
  double total = 0.0;
  for (const auto& train : trains)
    total += evaluate_loss(state.global_model, train);
  return total / static_cast<double>(trains.size());
}

}  // namespace

SeedData build_seed_data(const ExperimentConfig& config, std::uint64_t seed) {
  SeedData data;
  Dataset full;
  if (config.data.kind == DataKind::kBlobs) {
    full = gen_blobs(config.data.classes, config.data.dim,
                     config.data.per_class, config.data.spread,
                     derive_seed(seed, kDataStream));
    data.global_test = gen_blobs(config.data.classes, config.data.dim,
                                 config.data.test_per_class,
                                 config.data.spread,
                                 derive_seed(seed, kTestStream));
  } else {
    full = load_idx(config.data.train_images, config.data.train_labels);
    data.global_test = load_idx(config.data.test_images,
                                config.data.test_labels);
    if (full.feature_dim() != data.global_test.feature_dim())
      throw Error("experiment: train/test IDX dimensions differ");
    const std::size_t classes =
        std::max(full.class_count, data.global_test.class_count);
    full.class_count = classes;
    data.global_test.class_count = classes;
  }

  PartitionSpec spec;
  spec.client_count = config.clients;
  spec.concentration = config.concentration;
  spec.equal_size = config.equal_size;
  spec.seed = derive_seed(seed, kPartitionStream);
  std::vector<Dataset> locals = partition_dirichlet(full, spec);

  data.train.reserve(locals.size());
  data.test.reserve(locals.size());
  for (std::size_t i = 0; i < locals.size(); ++i) {
    auto [train, test] =
        split_local(locals[i], derive_seed(seed, kSplitStream, i));
    data.train.push_back(std::move(train));
    data.test.push_back(std::move(test));
  }
  return data;
}

SplitModel build_seed_model(const ExperimentConfig& config,
                            std::size_t input_dim, std::size_t classes,
                            std::uint64_t seed) {
  Rng rng(derive_seed(seed, kInitStream));
  return make_mlp_model(input_dim, config.model.hidden, config.model.repr_dim,
                        classes, rng);
}

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed,
                 std::size_t round_limit) {
  const SeedData data = build_seed_data(config, seed);
  const std::size_t input_dim = data.global_test.feature_dim();
  const std::size_t classes = data.global_test.class_count;

  FederationConfig fed = config.fed;
  fed.algo = fed.algo.normalized();

  SeedRun run;
  run.state = init_federation(
      build_seed_model(config, input_dim, classes, seed), config.clients,
      seed);

  const std::string name = algo_name(fed.algo.kind);
  RoundMetrics initial;
  initial.round = 0;
  initial.algo = name;
  initial.seed = seed;
  initial.local_acc = mean_local_accuracy(run.state, data.test);
  initial.global_acc = evaluate(run.state.global_model, data.global_test);
  initial.loss = mean_initial_loss(run.state, data.train);
  run.rows.push_back(initial);

  const std::size_t rounds = std::min(round_limit, config.rounds);
  for (std::size_t t = 1; t <= rounds; ++t) {
    const auto start = std::chrono::steady_clock::now();
    run.state = run_round(run.state, data.train, fed);
    const auto elapsed = std::chrono::steady_clock::now() - start;

    RoundMetrics row;
    row.round = t;
    row.algo = name;
    row.seed = seed;
    row.local_acc = mean_local_accuracy(run.state, data.test);
    row.global_acc = evaluate(run.state.global_model, data.global_test);
    row.loss = run.state.last_round_train_loss;
    row.wall_ms =
        config.record_timing
            ? std::chrono::duration_cast<std::chrono::milliseconds>(elapsed)
                  .count()
            : 0;
    run.rows.push_back(row);
  }
  return run;
}

std::vector<RoundMetrics> run_experiment(const ExperimentConfig& config) {
  validate(config);
  std::vector<RoundMetrics> rows;
  for (const std::uint64_t seed : config.seeds) {
    SeedRun run = run_seed(config, seed, config.rounds);
    rows.insert(rows.end(), run.rows.begin(), run.rows.end());
  }
  write_metrics(rows, config.out_dir);
  return rows;
}

}  // namespace fedhkd
