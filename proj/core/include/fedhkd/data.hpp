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
#include <filesystem>
#include <utility>
#include <vector>

#include "fedhkd/tensor.hpp"

namespace fedhkd {

struct Dataset {
  Tensor inputs;  // (count, feature_dim)
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const;
  std::vector<std::size_t> class_counts() const;
  Dataset subset(const std::vector<std::size_t>& indices) const;
  void check() const;  // row/label count agreement, labels < class_count
};

struct PartitionSpec {
  std::size_t client_count = 10;
  double concentration = 0.5;  // Dirichlet parameter; small = skewed clients
  bool equal_size = true;
  std::uint64_t seed = 0;
};

// Gaussian class clusters centered on a deterministic integer lattice (class
// j's center encodes j base-L across the leading coordinates, scaled by a
// fixed spacing). Exactly `per_class` samples per class, grouped by class.
Dataset gen_blobs(std::size_t class_count, std::size_t dim,
                  std::size_t per_class, double spread, std::uint64_t seed);

// Splits a dataset across clients: for every class, client shares are drawn
// from Dirichlet(concentration) and the class's (shuffled) samples are cut
// accordingly. With equal_size, surplus samples migrate to under-filled
// clients until everyone holds exactly floor(total / clients) samples; the
// few leftovers are dropped.
std::vector<Dataset> partition_dirichlet(const Dataset& dataset,
                                         const PartitionSpec& spec);

// Stratified 75/25 train/test split; per class the test set takes
// floor(count / 4) samples so both sides keep the local class distribution.
std::pair<Dataset, Dataset> split_local(const Dataset& local,
                                        std::uint64_t seed);

// IDX ingestion (big-endian, magic 0x00000803 for images and 0x00000801 for
// labels). Pixels are scaled to [0, 1] and images flattened to rows*cols.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

// Debug CSV round-trip: header x0..x{d-1},label then one row per sample.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

}  // namespace fedhkd
