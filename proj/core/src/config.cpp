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

#include "fedhkd/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedhkd/error.hpp"

namespace fedhkd {

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

using nlohmann::json;

double as_double(const std::string& key, const json& v) {
  if (!v.is_number())
    throw Error("config key '" + key + "' must be a number");
  return v.get<double>();
}

std::size_t as_size(const std::string& key, const json& v) {
  if (!v.is_number_integer() || v.get<double>() < 0)
    throw Error("config key '" + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean())
    throw Error("config key '" + key + "' must be true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string())
    throw Error("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

void set_key(ExperimentConfig& c, const std::string& key, const json& v) {
  if (key == "data.kind") {
    const std::string kind = as_string(key, v);
    if (kind == "blobs") c.data.kind = DataKind::kBlobs;
    else if (kind == "idx") c.data.kind = DataKind::kIdx;
    else throw Error("config key 'data.kind' must be 'blobs' or 'idx'");
  } else if (key == "data.classes") c.data.classes = as_size(key, v);
  else if (key == "data.dim") c.data.dim = as_size(key, v);
  else if (key == "data.per_class") c.data.per_class = as_size(key, v);
  else if (key == "data.test_per_class") c.data.test_per_class = as_size(key, v);
  else if (key == "data.spread") c.data.spread = as_double(key, v);
  else if (key == "data.train_images") c.data.train_images = as_string(key, v);
  else if (key == "data.train_labels") c.data.train_labels = as_string(key, v);
  else if (key == "data.test_images") c.data.test_images = as_string(key, v);
  else if (key == "data.test_labels") c.data.test_labels = as_string(key, v);
  else if (key == "model.hidden") c.model.hidden = as_size(key, v);
  else if (key == "model.repr_dim") c.model.repr_dim = as_size(key, v);
  else if (key == "clients") c.clients = as_size(key, v);
  else if (key == "beta") c.concentration = as_double(key, v);
  else if (key == "equal_size") c.equal_size = as_bool(key, v);
  else if (key == "algo") c.fed.algo.kind = algo_from_name(as_string(key, v));
  else if (key == "lambda") c.fed.algo.lambda = as_double(key, v);
  else if (key == "gamma") c.fed.algo.gamma = as_double(key, v);
  else if (key == "mu_prox") c.fed.algo.mu_prox = as_double(key, v);
  else if (key == "lambda_proto") c.fed.algo.lambda_proto = as_double(key, v);
  else if (key == "rounds") c.rounds = as_size(key, v);
  else if (key == "epochs") c.fed.epochs = as_size(key, v);
  else if (key == "batch") c.fed.batch_size = as_size(key, v);
  else if (key == "participation") c.fed.participation = as_double(key, v);
  else if (key == "dp.enabled") c.fed.dp.enabled = as_bool(key, v);
  else if (key == "dp.sigma") c.fed.dp.sigma = as_double(key, v);
  else if (key == "dp.zeta") c.fed.dp.zeta = as_double(key, v);
  else if (key == "dp.epsilon") c.fed.dp.epsilon = as_double(key, v);
  else if (key == "dp.delta") c.fed.dp.delta = as_double(key, v);
  else if (key == "nu") c.fed.share_threshold = as_double(key, v);
  else if (key == "temperature") c.fed.temperature = as_double(key, v);
  else if (key == "opt.lr") c.fed.adam.lr = as_double(key, v);
  else if (key == "opt.beta1") c.fed.adam.beta1 = as_double(key, v);
  else if (key == "opt.beta2") c.fed.adam.beta2 = as_double(key, v);
  else if (key == "opt.epsilon") c.fed.adam.epsilon = as_double(key, v);
  else if (key == "opt.decay_factor") c.fed.lr_decay_factor = as_double(key, v);
  else if (key == "opt.decay_every") c.fed.lr_decay_rounds = as_size(key, v);
  else if (key == "term2_all_classes") c.fed.term2_all_classes = as_bool(key, v);
  else if (key == "workers") c.fed.workers = as_size(key, v);
  else if (key == "out") c.out_dir = as_string(key, v);
  else if (key == "timing") c.record_timing = as_bool(key, v);
  else if (key == "seeds") {
    if (!v.is_array() || v.empty())
      throw Error("config key 'seeds' must be a nonempty array of integers");
    c.seeds.clear();
    for (const auto& s : v) c.seeds.push_back(as_size("seeds", s));
  } else {
    throw Error("unknown config key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  ExperimentConfig config = default_config();
  // An empty (or whitespace-only) file means "all defaults".
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    validate(config);
    return config;
  }

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("config: " + path.string() + " is not valid JSON: " +
                      e.what());
  }
  if (!doc.is_object())
    throw FormatError("config: " + path.string() +
                      " must be a JSON object with dotted keys");
  for (const auto& [key, value] : doc.items()) set_key(config, key, value);
  validate(config);
  return config;
}

void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value) {
  if (key == "seeds") {
    // Comma-separated list on the command line.
    json arr = json::array();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
      arr.push_back(json::parse(item, nullptr, true));
    set_key(config, key, arr);
    return;
  }
  json v;
  try {
    v = json::parse(value);
    if (v.is_object() || v.is_array()) v = json(value);
  } catch (const json::parse_error&) {
    v = json(value);  // bare strings (e.g. algo names, paths)
  }
  set_key(config, key, v);
}

void validate(const ExperimentConfig& config) {
  const auto fail = [](const std::string& key, const std::string& constraint) {
    throw Error("config key '" + key + "' " + constraint);
  };

  if (config.data.kind == DataKind::kBlobs) {
    if (config.data.classes < 2) fail("data.classes", "must be >= 2");
    if (config.data.dim < 1) fail("data.dim", "must be >= 1");
    if (config.data.per_class < 1) fail("data.per_class", "must be >= 1");
    if (config.data.test_per_class < 1)
      fail("data.test_per_class", "must be >= 1");
    if (config.data.spread < 0.0) fail("data.spread", "must be >= 0");
  } else {
    if (config.data.train_images.empty() || config.data.train_labels.empty())
      fail("data.train_images/train_labels", "are required for idx data");
    if (config.data.test_images.empty() || config.data.test_labels.empty())
      fail("data.test_images/test_labels", "are required for idx data");
  }
  if (config.model.hidden < 1) fail("model.hidden", "must be >= 1");
  if (config.model.repr_dim < 1) fail("model.repr_dim", "must be >= 1");
  if (config.clients < 1) fail("clients", "must be >= 1");
  if (config.concentration <= 0.0) fail("beta", "must be > 0");

  config.fed.algo.normalized().validate();
  if (config.fed.batch_size < 1) fail("batch", "must be >= 1");
  if (config.fed.participation <= 0.0 || config.fed.participation > 1.0)
    fail("participation", "must lie in (0, 1]");
  if (static_cast<std::size_t>(std::floor(
          static_cast<double>(config.clients) * config.fed.participation)) == 0)
    fail("participation", "selects no client: floor(clients * participation) "
                          "is 0");
  if (config.fed.dp.enabled && config.fed.dp.sigma <= 0.0)
    fail("dp.sigma", "must be > 0 while dp.enabled is true (set dp.enabled "
                     "to false to disable noise)");
  if (config.fed.dp.sigma < 0.0) fail("dp.sigma", "must be >= 0");
  if (config.fed.dp.zeta <= 0.0) fail("dp.zeta", "must be > 0");
  if (config.fed.dp.epsilon <= 0.0) fail("dp.epsilon", "must be > 0");
  if (config.fed.dp.delta <= 0.0 || config.fed.dp.delta >= 1.0)
    fail("dp.delta", "must lie in (0, 1)");
  if (config.fed.share_threshold < 0.0 || config.fed.share_threshold >= 1.0)
    fail("nu", "must lie in [0, 1)");
  if (config.fed.temperature <= 0.0) fail("temperature", "must be > 0");
  if (config.fed.adam.lr <= 0.0) fail("opt.lr", "must be > 0");
  if (config.fed.adam.beta1 < 0.0 || config.fed.adam.beta1 >= 1.0)
    fail("opt.beta1", "must lie in [0, 1)");
  if (config.fed.adam.beta2 < 0.0 || config.fed.adam.beta2 >= 1.0)
    fail("opt.beta2", "must lie in [0, 1)");
  if (config.fed.adam.epsilon <= 0.0) fail("opt.epsilon", "must be > 0");
  if (config.fed.lr_decay_factor <= 0.0 || config.fed.lr_decay_factor > 1.0)
    fail("opt.decay_factor", "must lie in (0, 1]");
  if (config.fed.lr_decay_rounds < 1) fail("opt.decay_every", "must be >= 1");
  if (config.fed.workers < 1) fail("workers", "must be >= 1");
  if (config.seeds.empty()) fail("seeds", "must be nonempty");
}

}  // namespace fedhkd
