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

namespace fedhkd {

struct RoundMetrics {
  std::size_t round = 0;
  std::string algo;
  std::uint64_t seed = 0;
  double local_acc = 0.0;   // mean of personalized models on local test sets
  double global_acc = 0.0;  // aggregated model on the global test set
  double loss = 0.0;        // mean training loss across the cohort
  std::int64_t wall_ms = 0;
};

// Writes metrics.csv (header round,algo,seed,local_acc,global_acc,loss,
// wall_ms) and a mirroring metrics.json into `dir`. Numbers are printed in
// shortest round-trip form, so identical values give identical bytes.
void write_metrics(const std::vector<RoundMetrics>& metrics,
                   const std::filesystem::path& dir);

std::string metrics_to_csv(const std::vector<RoundMetrics>& metrics);

}  // namespace fedhkd
