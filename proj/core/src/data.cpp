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

#include "fedhkd/data.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fedhkd/error.hpp"
#include "fedhkd/rng.hpp"

namespace fedhkd {

std::size_t Dataset::feature_dim() const {
  if (inputs.rank() != 2)
    throw ShapeError("Dataset: inputs must be (count, dim), got " +
                     inputs.shape_str());
  return inputs.cols();
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t label : labels) counts[label] += 1;
  return counts;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  const std::size_t dim = feature_dim();
  Dataset out;
  out.class_count = class_count;
  out.inputs = Tensor({indices.size(), dim});
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = inputs.row_span(indices[r]);
    auto dst = out.inputs.row_span(r);
    std::copy(src.begin(), src.end(), dst.begin());
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

void Dataset::check() const {
  if (inputs.rank() != 2 || inputs.rows() != labels.size())
    throw ShapeError("Dataset: inputs " + inputs.shape_str() +
                     " do not match " + std::to_string(labels.size()) +
                     " labels");
  for (std::size_t label : labels)
    if (label >= class_count)
      throw Error("Dataset: label " + std::to_string(label) +
                  " out of range for " + std::to_string(class_count) +
                  " classes");
}

namespace {

constexpr double kLatticeSpacing = 2.0;

// Class centers sit on a fixed integer lattice. When one axis per class
// fits, class j's center is kLatticeSpacing * e_j, which makes every
// pairwise center distance equal (no class is geometrically privileged).
// With more classes than dimensions, centers fall back to the base-L digit
// expansion of j, the smallest base that keeps all centers distinct.
std::vector<double> blob_center(std::size_t label, std::size_t class_count,
                                std::size_t dim) {
  std::vector<double> center(dim, 0.0);
  if (class_count <= dim) {
    center[label] = kLatticeSpacing;
    return center;
  }
  std::size_t base = 2;
  while (true) {
    std::size_t capacity = 1;
    bool enough = false;
    for (std::size_t d = 0; d < dim; ++d) {
      capacity *= base;
      if (capacity >= class_count) {
        enough = true;
        break;
      }
    }
    if (enough) break;
    ++base;
  }
  std::size_t rest = label;
  for (std::size_t d = 0; d < dim && rest > 0; ++d) {
    center[d] = kLatticeSpacing * static_cast<double>(rest % base);
    rest /= base;
  }
  return center;
}

}  // namespace

Dataset gen_blobs(std::size_t class_count, std::size_t dim,
                  std::size_t per_class, double spread, std::uint64_t seed) {
  if (class_count < 2) throw Error("gen_blobs: need at least 2 classes");
  if (per_class < 1) throw Error("gen_blobs: need at least 1 sample/class");
  if (dim < 1) throw Error("gen_blobs: dimension must be positive");
  if (spread < 0.0) throw Error("gen_blobs: spread must be >= 0");

  Rng rng(seed);
  Dataset out;
  out.class_count = class_count;
  out.inputs = Tensor({class_count * per_class, dim});
  out.labels.reserve(class_count * per_class);
  std::size_t row = 0;
  for (std::size_t j = 0; j < class_count; ++j) {
    const auto center = blob_center(j, class_count, dim);
    for (std::size_t k = 0; k < per_class; ++k, ++row) {
      auto dst = out.inputs.row_span(row);
      for (std::size_t d = 0; d < dim; ++d)
        dst[d] = center[d] + (spread > 0.0 ? rng.next_normal(0.0, spread) : 0.0);
      out.labels.push_back(j);
    }
  }
  return out;
}

std::vector<Dataset> partition_dirichlet(const Dataset& dataset,
                                         const PartitionSpec& spec) {
  dataset.check();
  if (spec.client_count < 1)
    throw Error("partition_dirichlet: need at least one client");
  if (spec.concentration <= 0.0)
    throw Error("partition_dirichlet: concentration must be positive");
  if (dataset.size() < spec.client_count)
    throw Error("partition_dirichlet: fewer samples (" +
                std::to_string(dataset.size()) + ") than clients (" +
                std::to_string(spec.client_count) + ")");

  const std::size_t m = spec.client_count;
  Rng rng(spec.seed);

  // Class-major assignment: client index lists grow class by class so the
  // later equal-size migration has a well-defined deterministic order.
  std::vector<std::vector<std::size_t>> assigned(m);
  std::vector<double> shares(m);
  for (std::size_t j = 0; j < dataset.class_count; ++j) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      if (dataset.labels[i] == j) members.push_back(i);
    if (members.empty()) continue;
    rng.shuffle(members);
    rng.dirichlet(spec.concentration, shares);

    double cum = 0.0;
    std::size_t start = 0;
    for (std::size_t c = 0; c < m; ++c) {
      cum += shares[c];
      std::size_t end =
          (c + 1 == m)
              ? members.size()
              : static_cast<std::size_t>(std::llround(
                    cum * static_cast<double>(members.size())));
      end = std::min(end, members.size());
      end = std::max(end, start);
      for (std::size_t k = start; k < end; ++k)
        assigned[c].push_back(members[k]);
      start = end;
    }
  }

  if (spec.equal_size) {
    const std::size_t target = dataset.size() / m;
    std::deque<std::size_t> pool;
    for (auto& list : assigned)
      while (list.size() > target) {
        pool.push_back(list.back());
        list.pop_back();
      }
    for (auto& list : assigned)
      while (list.size() < target && !pool.empty()) {
        list.push_back(pool.front());
        pool.pop_front();
      }
    // Up to m-1 leftovers in the pool are dropped so all clients are equal.
  }

  std::vector<Dataset> partitions;
  partitions.reserve(m);
  for (auto& list : assigned) partitions.push_back(dataset.subset(list));
  return partitions;
}

std::pair<Dataset, Dataset> split_local(const Dataset& local,
                                        std::uint64_t seed) {
  local.check();
  if (local.size() < 4)
    throw Error("split_local: need at least 4 samples, got " +
                std::to_string(local.size()));

  Rng rng(seed);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (std::size_t j = 0; j < local.class_count; ++j) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < local.size(); ++i)
      if (local.labels[i] == j) members.push_back(i);
    if (members.empty()) continue;
    rng.shuffle(members);
    const std::size_t test_count = members.size() / 4;  // floor of 25%
    for (std::size_t k = 0; k < members.size(); ++k)
      (k < test_count ? test_idx : train_idx).push_back(members[k]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {local.subset(train_idx), local.subset(test_idx)};
}

}  // namespace fedhkd
