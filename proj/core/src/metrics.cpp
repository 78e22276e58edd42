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

#include "fedhkd/metrics.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

#include "fedhkd/error.hpp"

namespace fedhkd {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

}  // namespace

std::string metrics_to_csv(const std::vector<RoundMetrics>& metrics) {
  std::string out = "round,algo,seed,local_acc,global_acc,loss,wall_ms\n";
  for (const auto& row : metrics) {
    out += std::to_string(row.round);
    out += ',';
    out += row.algo;
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += format_double(row.local_acc);
    out += ',';
    out += format_double(row.global_acc);
    out += ',';
    out += format_double(row.loss);
    out += ',';
    out += std::to_string(row.wall_ms);
    out += '\n';
  }
  return out;
}

void write_metrics(const std::vector<RoundMetrics>& metrics,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ofstream csv(dir / "metrics.csv", std::ios::binary);
    if (!csv) throw Error("write_metrics: cannot open metrics.csv in " +
                          dir.string());
    csv << metrics_to_csv(metrics);
    if (!csv) throw Error("write_metrics: write failed for metrics.csv");
  }

  nlohmann::json doc = nlohmann::json::array();
  for (const auto& row : metrics) {
    doc.push_back({{"round", row.round},
                   {"algo", row.algo},
                   {"seed", row.seed},
                   {"local_acc", row.local_acc},
                   {"global_acc", row.global_acc},
                   {"loss", row.loss},
                   {"wall_ms", row.wall_ms}});
  }
  std::ofstream js(dir / "metrics.json", std::ios::binary);
  if (!js) throw Error("write_metrics: cannot open metrics.json in " +
                       dir.string());
  js << doc.dump(2) << '\n';
  if (!js) throw Error("write_metrics: write failed for metrics.json");
}

}  // namespace fedhkd
