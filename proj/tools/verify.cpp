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

#include "verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "fedhkd/federation.hpp"
#include "fedhkd/hyperknowledge.hpp"
#include "fedhkd/loss.hpp"
#include "fedhkd/rng.hpp"

namespace fedhkd::tools {

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %s (%s)\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  if (!ok) ++g_failures;
}

void check_privacy_arithmetic() {
  const double sigma = min_sigma(0.5, 0.01);
  const double sens = sensitivity(3.0, 256);
  const double variance = (sens * 7.0) * (sens * 7.0);
  const bool ok = std::abs(sigma - 6.215) < 1e-3 &&
                  std::abs(sens - 0.0234375) < 1e-12 &&
                  std::abs(variance - 0.026917) < 1e-6;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "min_sigma(0.5,0.01)=%.6f, (S_f*7)^2=%.6f", sigma, variance);
  report("privacy-arithmetic", ok, detail);
}

void check_sensitivity_brute_force() {
  Rng rng(1);
  const double zeta = 3.0;
  bool ok = true;
  double worst_ratio = 0.0;
  for (std::size_t n : {2, 5, 32, 256}) {
    const double bound = sensitivity(zeta, n);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
      std::vector<double> values(n);
      double total = 0.0;
      for (auto& v : values) {
        v = (2.0 * rng.next_unit() - 1.0) * zeta;
        total += v;
      }
      const double mean = total / double(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double reduced = (total - values[k]) / double(n - 1);
        const double diff = std::abs(mean - reduced);
        worst_ratio = std::max(worst_ratio, diff / bound);
        if (diff > bound) ok = false;
      }
    }
  }
  char detail[96];
  std::snprintf(detail, sizeof detail, "worst |mean shift| / bound = %.4f",
                worst_ratio);
  report("sensitivity-brute-force", ok, detail);
}

void check_gradients() {
  Rng rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const AlgoKind kinds[] = {AlgoKind::kFedAvg, AlgoKind::kFedProx,
                              AlgoKind::kFedProto, AlgoKind::kFedHkd,
                              AlgoKind::kFedHkdStar};
    AlgoSpec algo;
    algo.kind = kinds[trial % 5];
    algo = algo.normalized();

    SplitModel model = make_mlp_model(3, 4, 3, 3, rng);
    SplitModel snapshot = model;
    for (Tensor* t : snapshot.trainable_params())
      for (auto& v : t->values()) v += 0.1 * rng.next_normal();

    GlobalHyperKnowledge knowledge;
    knowledge.classes.assign(3, std::nullopt);
    for (std::size_t j = 0; j < 2; ++j) {
      GlobalClassKnowledge entry;
      entry.repr = Tensor({3});
      for (auto& v : entry.repr.values()) v = rng.next_normal();
      entry.soft = Tensor::full({3}, 1.0 / 3.0);
      knowledge.classes[j] = std::move(entry);
    }

    Tensor x({4, 3});
    for (auto& v : x.values()) v = rng.next_normal();
    std::vector<std::size_t> labels;
    for (int i = 0; i < 4; ++i) labels.push_back(rng.next_below(3));

    const LossResult analytic =
        local_loss(algo, model, x, labels, knowledge, 0.5, &snapshot);
    auto params = model.trainable_params();
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor& param = *params[p];
      for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        const double step = 1e-5;
        param[i] = saved + step;
        const double hi =
            local_loss(algo, model, x, labels, knowledge, 0.5, &snapshot).loss;
        param[i] = saved - step;
        const double lo =
            local_loss(algo, model, x, labels, knowledge, 0.5, &snapshot).loss;
        param[i] = saved;
        const double numeric = (hi - lo) / (2.0 * step);
        const double analytic_v = analytic.grads[p][i];
        // Floor above the difference quotient's own resolution, so
        // near-zero gradients are checked absolutely.
        const double denom = std::max(
            {std::abs(numeric), std::abs(analytic_v), 1e-5});
        worst = std::max(worst, std::abs(numeric - analytic_v) / denom);
      }
    }
  }
  char detail[96];
  std::snprintf(detail, sizeof detail, "worst relative error = %.2e", worst);
  report("objective-gradients-vs-finite-differences", worst < 1e-4, detail);
}

void check_noise_cancellation() {
  const std::size_t m = 10;
  const std::size_t count = 32;
  DpConfig dp;
  dp.zeta = 3.0;
  dp.sigma = 7.0;

  Rng init(3);
  std::vector<ClassHyperKnowledge> bases;
  for (std::size_t i = 0; i < m; ++i) {
    ClassHyperKnowledge hk;
    hk.label = 0;
    hk.mean_repr = Tensor({2});
    for (auto& v : hk.mean_repr.values()) v = init.next_normal();
    hk.mean_soft = Tensor::vector({1.0});
    hk.count = count;
    bases.push_back(std::move(hk));
  }
  std::vector<double> clean(2, 0.0);
  for (const auto& b : bases)
    for (std::size_t d = 0; d < 2; ++d) clean[d] += b.mean_repr[d] / double(m);

  const double sens = sensitivity(dp.zeta, count);
  const double predicted =
      dp.sigma * dp.sigma / double(m * m) * double(m) * sens * sens;

  Rng rng(4);
  const int draws = 20000;
  std::vector<double> sum(2, 0.0), sum_sq(2, 0.0);
  for (int it = 0; it < draws; ++it) {
    std::vector<std::pair<std::size_t, LocalHyperKnowledge>> contributions;
    for (std::size_t i = 0; i < m; ++i) {
      LocalHyperKnowledge lk;
      lk.emplace(0, privatize(bases[i], dp, rng));
      contributions.emplace_back(i, std::move(lk));
    }
    const auto global = aggregate_hk(contributions, 1, 1);
    for (std::size_t d = 0; d < 2; ++d) {
      const double dev = global.classes[0]->repr[d] - clean[d];
      sum[d] += dev;
      sum_sq[d] += dev * dev;
    }
  }
  bool ok = true;
  double worst = 0.0;
  for (std::size_t d = 0; d < 2; ++d) {
    const double mean = sum[d] / draws;
    const double var = sum_sq[d] / draws - mean * mean;
    const double rel = std::abs(var - predicted) / predicted;
    worst = std::max(worst, rel);
    if (rel > 0.10) ok = false;
  }
  char detail[96];
  std::snprintf(detail, sizeof detail,
                "worst |var - predicted| / predicted = %.3f", worst);
  report("aggregation-noise-cancellation", ok, detail);
}

void check_partition_statistics() {
  bool uniform_ok = true;
  const Dataset big = gen_blobs(10, 2, 1000, 1.0, 5);
  const auto global_counts = big.class_counts();
  for (std::uint64_t seed = 1; seed <= 10 && uniform_ok; ++seed) {
    PartitionSpec spec;
    spec.client_count = 10;
    spec.concentration = 1e6;
    spec.seed = seed;
    for (const auto& p : partition_dirichlet(big, spec)) {
      const auto counts = p.class_counts();
      for (std::size_t j = 0; j < 10; ++j) {
        const double local = double(counts[j]) / double(p.size());
        const double global = double(global_counts[j]) / double(big.size());
        if (std::abs(local - global) > 0.03) uniform_ok = false;
      }
    }
  }
  report("dirichlet-high-beta-uniform", uniform_ok, "beta=1e6, 10 seeds");

  const Dataset small = gen_blobs(10, 2, 100, 1.0, 6);
  int skewed = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PartitionSpec spec;
    spec.client_count = 10;
    spec.concentration = 0.2;
    spec.seed = seed;
    bool any = false;
    for (const auto& p : partition_dirichlet(small, spec)) {
      auto counts = p.class_counts();
      std::sort(counts.begin(), counts.end(), std::greater<>());
      if (double(counts[0] + counts[1]) / double(p.size()) >= 0.8) any = true;
    }
    if (any) ++skewed;
  }
  char detail[64];
  std::snprintf(detail, sizeof detail, "%d/10 seeds had a >=80%% client",
                skewed);
  report("dirichlet-low-beta-concentrated", skewed >= 8, detail);
}

void check_reduction_equivalence() {
  Rng rng(7);
  SplitModel model = make_mlp_model(2, 4, 3, 3, rng);
  const Dataset full = gen_blobs(3, 2, 36, 1.0, 8);
  PartitionSpec spec;
  spec.client_count = 3;
  spec.concentration = 0.5;
  spec.seed = 9;
  const auto train = partition_dirichlet(full, spec);

  FederationConfig avg;
  avg.algo.kind = AlgoKind::kFedAvg;
  avg.algo = avg.algo.normalized();
  avg.epochs = 2;
  avg.batch_size = 8;
  avg.dp.enabled = false;
  avg.dp.sigma = 0.0;

  FederationConfig hkd = avg;
  hkd.algo.kind = AlgoKind::kFedHkd;
  hkd.algo.lambda = 0.0;
  hkd.algo.gamma = 0.0;

  FederationState a = init_federation(model, 3, 99);
  FederationState h = a;
  bool ok = true;
  for (int round = 0; round < 3; ++round) {
    a = run_round(a, train, avg);
    h = run_round(h, train, hkd);
    if (!a.global_model.params_equal(h.global_model)) ok = false;
  }
  report("fedhkd-zero-coefficients-equals-fedavg", ok, "3 rounds, bitwise");
}

}  // namespace

int run_verify_suites() {
  g_failures = 0;
  check_privacy_arithmetic();
  check_sensitivity_brute_force();
  check_gradients();
  check_noise_cancellation();
  check_partition_statistics();
  check_reduction_equivalence();
  return g_failures;
}

}  // namespace fedhkd::tools
