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

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "fedhkd/data.hpp"
#include "fedhkd/error.hpp"

namespace fedhkd {

namespace {

// Shortest round-trip decimal form of a double; locale-independent.
std::string format_double(double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

}  // namespace

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.check();
  std::ofstream out(path);
  if (!out) throw Error("save_csv: cannot open " + path.string());
  const std::size_t dim = dataset.feature_dim();
  for (std::size_t d = 0; d < dim; ++d) out << 'x' << d << ',';
  out << "label\n";
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    const auto row = dataset.inputs.row_span(r);
    for (std::size_t d = 0; d < dim; ++d) out << format_double(row[d]) << ',';
    out << dataset.labels[r] << '\n';
  }
  if (!out) throw Error("save_csv: write failed for " + path.string());
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("load_csv: empty file " + path.string());

  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string field;
    while (std::getline(header, field, ',')) ++dim;
    if (dim < 2)
      throw FormatError("load_csv: header needs features and a label column");
    --dim;  // last column is the label
  }

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t max_label = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::size_t col = 0;
    while (std::getline(row, field, ',')) {
      if (col < dim) {
        values.push_back(std::stod(field));
      } else {
        const std::size_t label = std::stoul(field);
        labels.push_back(label);
        max_label = std::max(max_label, label);
      }
      ++col;
    }
    if (col != dim + 1)
      throw FormatError("load_csv: row with " + std::to_string(col) +
                        " fields, expected " + std::to_string(dim + 1));
  }

  Dataset out;
  out.inputs = Tensor({labels.size(), dim}, std::move(values));
  out.labels = std::move(labels);
  out.class_count = max_label + 1;
  return out;
}

}  // namespace fedhkd
