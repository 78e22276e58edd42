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

#include "fedhkd/federation.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "fedhkd/error.hpp"
#include "fedhkd/loss.hpp"

namespace fedhkd {

namespace {

// Tags keeping the per-purpose random streams disjoint.
constexpr std::uint64_t kSelectStream = 0x5e1ec7;
constexpr std::uint64_t kShuffleStream = 0x7ba7c4;
constexpr std::uint64_t kDpStream = 0xd015e;

// Euclidean-norm gradients are undefined at zero; below this the term
// contributes no gradient (valid subgradient).
constexpr double kNormFloor = 1e-12;

}  // namespace

std::string algo_name(AlgoKind kind) {
  switch (kind) {
    case AlgoKind::kFedAvg: return "fedavg";
    case AlgoKind::kFedProx: return "fedprox";
    case AlgoKind::kFedProto: return "fedproto";
    case AlgoKind::kFedHkd: return "fedhkd";
    case AlgoKind::kFedHkdStar: return "fedhkd_star";
  }
  return "unknown";
}

AlgoKind algo_from_name(const std::string& name) {
  if (name == "fedavg") return AlgoKind::kFedAvg;
  if (name == "fedprox") return AlgoKind::kFedProx;
  if (name == "fedproto") return AlgoKind::kFedProto;
  if (name == "fedhkd") return AlgoKind::kFedHkd;
  if (name == "fedhkd_star") return AlgoKind::kFedHkdStar;
  throw Error("unknown algorithm '" + name +
              "' (expected fedavg|fedprox|fedproto|fedhkd|fedhkd_star)");
}

bool AlgoSpec::shares_hyper_knowledge() const {
  return kind == AlgoKind::kFedProto || kind == AlgoKind::kFedHkd ||
         kind == AlgoKind::kFedHkdStar;
}

double AlgoSpec::distill_coefficient() const {
  return (kind == AlgoKind::kFedHkd || kind == AlgoKind::kFedHkdStar) ? lambda
                                                                      : 0.0;
}

double AlgoSpec::prototype_coefficient() const {
  if (kind == AlgoKind::kFedHkd) return gamma;
  if (kind == AlgoKind::kFedProto) return lambda_proto;
  return 0.0;
}

AlgoSpec AlgoSpec::normalized() const {
  AlgoSpec out = *this;
  if (kind == AlgoKind::kFedAvg || kind == AlgoKind::kFedProx ||
      kind == AlgoKind::kFedProto) {
    out.lambda = 0.0;
    out.gamma = 0.0;
  }
  if (kind == AlgoKind::kFedHkdStar) out.gamma = 0.0;
  return out;
}

void AlgoSpec::validate() const {
  if (lambda < 0.0 || gamma < 0.0 || mu_prox < 0.0 || lambda_proto < 0.0)
    throw Error("AlgoSpec: coefficients must be nonnegative");
  if (kind == AlgoKind::kFedAvg && (lambda != 0.0 || gamma != 0.0))
    throw Error("AlgoSpec: fedavg requires lambda = gamma = 0");
  if (kind == AlgoKind::kFedHkdStar && gamma != 0.0)
    throw Error("AlgoSpec: fedhkd_star requires gamma = 0");
}

double effective_lr(const FederationConfig& config, std::size_t round) {
  if (round == 0) return config.adam.lr;
  const std::size_t decays =
      config.lr_decay_rounds == 0 ? 0 : (round - 1) / config.lr_decay_rounds;
  return config.adam.lr *
         std::pow(config.lr_decay_factor, static_cast<double>(decays));
}

FederationState init_federation(SplitModel initial_model,
                                std::size_t client_count,
                                std::uint64_t root_seed) {
  FederationState state;
  state.client_models.assign(client_count, initial_model);
  state.global_model = std::move(initial_model);
  state.knowledge.classes.assign(state.global_model.class_count(),
                                 std::nullopt);
  state.knowledge.round = 0;
  state.round = 0;
  state.root_seed = root_seed;
  return state;
}

namespace {

// Flattens per-layer gradients into the model's trainable-parameter order.
void append_layer_grads(const std::vector<LayerGrads>& layer_grads,
                        std::vector<Tensor>& out) {
  for (const auto& lg : layer_grads)
    for (const auto& g : lg.grads) out.push_back(g);
}

std::size_t count_grads(const std::vector<LayerGrads>& layer_grads) {
  std::size_t n = 0;
  for (const auto& lg : layer_grads) n += lg.grads.size();
  return n;
}

}  // namespace

LossResult local_loss(const AlgoSpec& algo, SplitModel& model, const Tensor& x,
                      const std::vector<std::size_t>& labels,
                      const GlobalHyperKnowledge& knowledge, double temperature,
                      const SplitModel* global_snapshot,
                      bool term2_all_classes) {
  if (labels.empty()) throw Error("local_loss: empty batch");
  const std::size_t batch = labels.size();

  std::vector<LayerCache> ext_caches;
  std::vector<LayerCache> cls_caches;
  const Tensor h = extract_train(model, x, &ext_caches);
  const Tensor z = classify_train(model, h, &cls_caches);
  const Tensor probs = softmax(z);
  auto [ce_loss, dz] = cross_entropy(probs, labels);

  double loss = ce_loss;

  std::vector<LayerGrads> cls_grads;
  Tensor dh = backward_stack(model.classifier, cls_caches, dz, &cls_grads);

  // Representation-alignment term: pull each sample's representation toward
  // the global mean representation of its class, when that class is known.
  const double proto_coef = algo.prototype_coefficient();
  if (proto_coef > 0.0 && knowledge.has_any()) {
    const double scale = proto_coef / static_cast<double>(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t label = labels[k];
      if (label >= knowledge.classes.size() || !knowledge.classes[label])
        continue;
      const Tensor& target = knowledge.classes[label]->repr;
      const auto hrow = h.row_span(k);
      double sq = 0.0;
      for (std::size_t d = 0; d < hrow.size(); ++d) {
        const double diff = hrow[d] - target[d];
        sq += diff * diff;
      }
      const double norm = std::sqrt(sq);
      loss += scale * norm;
      if (norm > kNormFloor) {
        auto dh_row = dh.row_span(k);
        for (std::size_t d = 0; d < hrow.size(); ++d)
          dh_row[d] += scale * (hrow[d] - target[d]) / norm;
      }
    }
  }

  std::vector<LayerGrads> ext_grads;
  backward_stack(model.extractor, ext_caches, dh, &ext_grads);

  // Classifier-alignment term: the local classifier, fed the global mean
  // representations, should reproduce the global soft predictions. Gradients
  // reach only the classifier; the representations are constants.
  const double distill_coef = algo.distill_coefficient();
  if (distill_coef > 0.0 && knowledge.has_any()) {
    std::vector<std::size_t> present;
    for (std::size_t j = 0; j < knowledge.classes.size(); ++j)
      if (knowledge.classes[j]) present.push_back(j);

    const std::size_t repr_dim = knowledge.classes[present[0]]->repr.size();
    Tensor h_global({present.size(), repr_dim});
    for (std::size_t r = 0; r < present.size(); ++r) {
      const auto& src = knowledge.classes[present[r]]->repr;
      auto dst = h_global.row_span(r);
      for (std::size_t d = 0; d < repr_dim; ++d) dst[d] = src[d];
    }

    std::vector<LayerCache> distill_caches;
    const Tensor z_global =
        classify_train(model, h_global, &distill_caches);
    const Tensor u = soft_target(z_global, temperature);

    const double denom = static_cast<double>(
        term2_all_classes ? knowledge.classes.size() : present.size());
    const double scale = distill_coef / denom;

    Tensor dz_global({present.size(), u.cols()});
    for (std::size_t r = 0; r < present.size(); ++r) {
      const auto& target = knowledge.classes[present[r]]->soft;
      const auto urow = u.row_span(r);
      double sq = 0.0;
      for (std::size_t c = 0; c < urow.size(); ++c) {
        const double diff = urow[c] - target[c];
        sq += diff * diff;
      }
      const double norm = std::sqrt(sq);
      loss += scale * norm;
      if (norm <= kNormFloor) continue;
      // d||u - q|| / du, then through the tempered softmax:
      // dz_c = (1/T) * u_c * (g_c - <g, u>).
      std::vector<double> g(urow.size());
      for (std::size_t c = 0; c < urow.size(); ++c)
        g[c] = scale * (urow[c] - target[c]) / norm;
      const double g_dot_u = dot(g, urow);
      auto dzrow = dz_global.row_span(r);
      for (std::size_t c = 0; c < urow.size(); ++c)
        dzrow[c] = urow[c] * (g[c] - g_dot_u) / temperature;
    }

    std::vector<LayerGrads> distill_grads;
    backward_stack(model.classifier, distill_caches, dz_global,
                   &distill_grads);
    for (std::size_t i = 0; i < cls_grads.size(); ++i)
      for (std::size_t p = 0; p < cls_grads[i].grads.size(); ++p)
        axpy(1.0, distill_grads[i].grads[p], cls_grads[i].grads[p]);
  }

  LossResult result;
  result.grads.reserve(count_grads(ext_grads) + count_grads(cls_grads));
  append_layer_grads(ext_grads, result.grads);
  append_layer_grads(cls_grads, result.grads);

  // Proximal term: quadratic pull toward the round's broadcast parameters.
  if (algo.kind == AlgoKind::kFedProx && algo.mu_prox > 0.0) {
    if (!global_snapshot)
      throw Error("local_loss: fedprox requires the global parameter snapshot");
    const auto local = model.trainable_params();
    const auto global = global_snapshot->trainable_params();
    if (local.size() != global.size())
      throw Error("local_loss: snapshot does not match model parameters");
    for (std::size_t i = 0; i < local.size(); ++i) {
      loss += 0.5 * algo.mu_prox * squared_distance(*local[i], *global[i]);
      Tensor delta = *local[i];
      axpy(-1.0, *global[i], delta);
      axpy(algo.mu_prox, delta, result.grads[i]);
    }
  }

  if (!std::isfinite(loss))
    throw Error("local_loss: non-finite loss (" + std::to_string(loss) +
                ") for " + algo_name(algo.kind) + " on batch of " +
                std::to_string(batch));
  result.loss = loss;
  return result;
}

ClientUpdate local_update(const SplitModel& start_model,
                          const GlobalHyperKnowledge& knowledge,
                          const Dataset& train, const FederationConfig& config,
                          double lr, std::size_t client_id,
                          std::uint64_t shuffle_seed, std::uint64_t dp_seed) {
  train.check();
  if (train.size() == 0)
    throw Error("local_update: client " + std::to_string(client_id) +
                " has no training data");

  ClientUpdate update;
  update.client_id = client_id;
  update.model = start_model;
  update.sample_count = train.size();

  AdamConfig adam = config.adam;
  adam.lr = lr;
  auto params = update.model.trainable_params();
  AdamState opt_state{std::span<Tensor* const>(params)};

  Rng shuffle_rng(shuffle_seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);
  double loss_sum = 0.0;
  std::size_t steps = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + batch_size);
      // A trailing single-sample batch cannot pass train-mode batchnorm;
      // fold it into this batch instead.
      if (order.size() - end == 1) end = order.size();
      const std::size_t rows = end - start;
      Tensor x({rows, train.feature_dim()});
      std::vector<std::size_t> labels(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t src = order[start + r];
        const auto src_row = train.inputs.row_span(src);
        auto dst_row = x.row_span(r);
        std::copy(src_row.begin(), src_row.end(), dst_row.begin());
        labels[r] = train.labels[src];
      }
      LossResult step = local_loss(config.algo, update.model, x, labels,
                                   knowledge, config.temperature, &start_model,
                                   config.term2_all_classes);
      adam_step(std::span<Tensor* const>(params), step.grads, opt_state, adam);
      loss_sum += step.loss;
      ++steps;
      start = end;
    }
  }
  update.mean_train_loss =
      steps > 0 ? loss_sum / static_cast<double>(steps)
                : evaluate_loss(update.model, train);

  if (config.algo.shares_hyper_knowledge()) {
    Rng dp_rng(dp_seed);
    LocalHyperKnowledge hk =
        compute_local_hk(update.model, train, config.share_threshold,
                         config.temperature, config.dp.zeta);
    for (auto& [label, entry] : hk)
      entry = privatize(std::move(entry), config.dp, dp_rng);
    update.hyper_knowledge = std::move(hk);
  }
  return update;
}

SplitModel aggregate_models(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw Error("aggregate_models: no updates");
  double total = 0.0;
  for (const auto& u : updates) total += static_cast<double>(u.sample_count);
  if (total <= 0.0) throw Error("aggregate_models: zero total sample count");

  SplitModel out = updates.front().model;
  for (Tensor* t : out.all_tensors())
    for (auto& v : t->values()) v = 0.0;

  auto out_tensors = out.all_tensors();
  for (const auto& u : updates) {
    if (!u.model.same_architecture(out))
      throw ShapeError("aggregate_models: client " +
                       std::to_string(u.client_id) +
                       " model architecture mismatch");
    const double weight = static_cast<double>(u.sample_count) / total;
    const auto tensors = u.model.all_tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i)
      axpy(weight, *tensors[i], *out_tensors[i]);
  }
  return out;
}

std::vector<std::size_t> select_clients(std::size_t client_count,
                                        double participation, Rng& rng) {
  if (participation <= 0.0 || participation > 1.0)
    throw Error("select_clients: participation must lie in (0, 1]");
  const std::size_t cohort = static_cast<std::size_t>(
      std::floor(static_cast<double>(client_count) * participation));
  if (cohort == 0)
    throw Error("select_clients: floor(" + std::to_string(client_count) +
                " * " + std::to_string(participation) + ") selects no client");

  std::vector<std::size_t> ids(client_count);
  for (std::size_t i = 0; i < client_count; ++i) ids[i] = i;
  for (std::size_t i = 0; i < cohort; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.next_below(client_count - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(cohort);
  std::sort(ids.begin(), ids.end());
  return ids;
}

FederationState run_round(const FederationState& state,
                          const std::vector<Dataset>& client_train,
                          const FederationConfig& config) {
  const std::size_t clients = client_train.size();
  if (state.client_models.size() != clients)
    throw Error("run_round: state tracks " +
                std::to_string(state.client_models.size()) +
                " clients but " + std::to_string(clients) +
                " datasets were provided");

  const std::size_t round = state.round + 1;
  const double lr = effective_lr(config, round);

  Rng select_rng(derive_seed(state.root_seed, round, kSelectStream));
  const std::vector<std::size_t> cohort =
      select_clients(clients, config.participation, select_rng);

  // Per-client updates are pure functions of the broadcast snapshot and their
  // derived seeds, so any worker interleaving yields identical results.
  std::vector<ClientUpdate> updates(cohort.size());
  std::vector<std::exception_ptr> failures(cohort.size());
  const bool proto_local = (config.algo.kind == AlgoKind::kFedProto);

  auto run_client = [&](std::size_t slot) {
    const std::size_t id = cohort[slot];
    const SplitModel& start =
        proto_local ? state.client_models[id] : state.global_model;
    const std::uint64_t shuffle_seed =
        derive_seed(state.root_seed, round, id, kShuffleStream);
    const std::uint64_t dp_seed =
        derive_seed(state.root_seed, round, id, kDpStream);
    updates[slot] = local_update(start, state.knowledge, client_train[id],
                                 config, lr, id, shuffle_seed, dp_seed);
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(config.workers, cohort.size()));
  if (workers == 1) {
    for (std::size_t slot = 0; slot < cohort.size(); ++slot) {
      run_client(slot);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t slot = next.fetch_add(1); slot < cohort.size();
             slot = next.fetch_add(1)) {
          try {
            run_client(slot);
          } catch (...) {
            failures[slot] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    // A failed client aborts the whole round; report the lowest slot so the
    // error is independent of scheduling.
    for (const auto& failure : failures)
      if (failure) std::rethrow_exception(failure);
  }

  FederationState next_state = state;
  next_state.round = round;
  for (std::size_t slot = 0; slot < cohort.size(); ++slot)
    next_state.client_models[cohort[slot]] = updates[slot].model;

  // For fedproto the parameter average never reaches clients (their models
  // stay local); it exists to evaluate a global metric.
  next_state.global_model = aggregate_models(updates);

  if (config.algo.shares_hyper_knowledge()) {
    std::vector<std::pair<std::size_t, LocalHyperKnowledge>> contributions;
    contributions.reserve(updates.size());
    for (auto& u : updates)
      contributions.emplace_back(u.client_id, std::move(u.hyper_knowledge));
    next_state.knowledge = aggregate_hk(
        contributions, state.global_model.class_count(), round);
  } else {
    next_state.knowledge.round = round;
  }

  double loss_sum = 0.0;
  for (const auto& u : updates) loss_sum += u.mean_train_loss;
  next_state.last_round_train_loss =
      loss_sum / static_cast<double>(updates.size());
  return next_state;
}

double evaluate(const SplitModel& model, const Dataset& dataset) {
  dataset.check();
  if (dataset.size() == 0) throw Error("evaluate: empty dataset");
  constexpr std::size_t kChunk = 256;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < dataset.size(); start += kChunk) {
    const std::size_t end = std::min(dataset.size(), start + kChunk);
    std::vector<std::size_t> rows(end - start);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = start + i;
    const Dataset chunk = dataset.subset(rows);
    const Tensor logits = classify(model, extract(model, chunk.inputs));
    for (std::size_t r = 0; r < logits.rows(); ++r)
      if (argmax_row(logits.row_span(r)) == chunk.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

double evaluate_loss(const SplitModel& model, const Dataset& dataset) {
  dataset.check();
  if (dataset.size() == 0) throw Error("evaluate_loss: empty dataset");
  const Tensor logits = classify(model, extract(model, dataset.inputs));
  return cross_entropy(softmax(logits), dataset.labels).loss;
}

}  // namespace fedhkd
