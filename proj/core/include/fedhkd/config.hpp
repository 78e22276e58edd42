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
#include <string>
#include <vector>

#include "fedhkd/federation.hpp"

namespace fedhkd {

enum class DataKind { kBlobs, kIdx };

struct DataConfig {
  DataKind kind = DataKind::kBlobs;
  // blobs
  std::size_t classes = 10;
  std::size_t dim = 16;
  std::size_t per_class = 80;
  std::size_t test_per_class = 50;
  double spread = 1.0;
  // idx
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

struct ModelConfig {
  std::size_t hidden = 32;
  std::size_t repr_dim = 8;
};

// Complete description of an experiment. Flat JSON with dotted keys on disk;
// CLI flags override file values, file values override defaults.
struct ExperimentConfig {
  DataConfig data;
  ModelConfig model;
  std::size_t clients = 10;
  double concentration = 0.5;  // Dirichlet beta
  bool equal_size = true;
  FederationConfig fed;
  std::size_t rounds = 50;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "out";
  // When false (default), the wall-clock column in the metrics is written as
  // zero so outputs are byte-identical across runs and worker counts.
  bool record_timing = false;
};

ExperimentConfig default_config();

// Parses a flat JSON config file with dotted keys (e.g. {"dp.sigma": 7}).
// An empty file yields the all-defaults config. Unknown keys are rejected.
ExperimentConfig parse_config_file(const std::filesystem::path& path);

// Applies one `key=value` override (same key names as the file).
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

// Validates every range constraint; error messages name the offending key.
void validate(const ExperimentConfig& config);

}  // namespace fedhkd
