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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedhkd/config.hpp"
#include "fedhkd/experiment.hpp"
#include "fedhkd/hyperknowledge.hpp"
#include "verify.hpp"

namespace {

using namespace fedhkd;

struct CommonFlags {
  std::string config_path;
  std::string seeds;
  std::string algo;
  std::string out;
  bool timing = false;
  std::vector<std::string> overrides;  // key=value pairs
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "JSON config file (flat, dotted keys)");
  cmd->add_option("--seed", flags.seeds, "comma-separated seed list");
  cmd->add_option("--algo", flags.algo,
                  "fedavg|fedprox|fedproto|fedhkd|fedhkd_star");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_flag("--timing", flags.timing,
                "record real wall-clock times (breaks byte-for-byte "
                "reproducibility of the metrics files)");
  cmd->add_option("--set", flags.overrides,
                  "extra key=value override, any config key")
      ->expected(-1);
}

// Precedence: defaults < config file < dedicated flags < --set overrides.
ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig config = flags.config_path.empty()
                                ? default_config()
                                : parse_config_file(flags.config_path);
  if (!flags.seeds.empty()) apply_override(config, "seeds", flags.seeds);
  if (!flags.algo.empty()) apply_override(config, "algo", flags.algo);
  if (!flags.out.empty()) apply_override(config, "out", flags.out);
  if (flags.timing) config.record_timing = true;
  for (const auto& pair : flags.overrides) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos)
      throw Error("--set expects key=value, got '" + pair + "'");
    apply_override(config, pair.substr(0, eq), pair.substr(eq + 1));
  }
  validate(config);
  return config;
}

int cmd_run(const CommonFlags& flags) {
  const ExperimentConfig config = resolve_config(flags);
  const auto rows = run_experiment(config);
  std::printf("wrote %zu metric rows to %s\n", rows.size(),
              config.out_dir.c_str());
  // Final-round summary per seed.
  for (const auto& row : rows) {
    if (row.round != config.rounds) continue;
    std::printf("seed %llu  round %zu  local %.4f  global %.4f  loss %.4f\n",
                static_cast<unsigned long long>(row.seed), row.round,
                row.local_acc, row.global_acc, row.loss);
  }
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& beta_list,
              const std::string& algo_list) {
  const ExperimentConfig base = resolve_config(flags);

  std::vector<std::string> algos;
  {
    std::stringstream ss(algo_list.empty() ? algo_name(base.fed.algo.kind)
                                           : algo_list);
    std::string item;
    while (std::getline(ss, item, ',')) algos.push_back(item);
  }
  std::vector<std::string> betas;
  {
    std::stringstream ss(beta_list.empty() ? std::to_string(base.concentration)
                                           : beta_list);
    std::string item;
    while (std::getline(ss, item, ',')) betas.push_back(item);
  }

  for (const auto& algo : algos) {
    for (const auto& beta : betas) {
      ExperimentConfig config = base;
      apply_override(config, "algo", algo);
      apply_override(config, "beta", beta);
      config.out_dir = (std::filesystem::path(base.out_dir) /
                        (algo + "_beta" + beta))
                           .string();
      validate(config);
      std::printf("sweep: algo=%s beta=%s -> %s\n", algo.c_str(), beta.c_str(),
                  config.out_dir.c_str());
      run_experiment(config);
    }
  }
  return 0;
}

int cmd_dump_hk(const CommonFlags& flags, std::size_t round,
                const std::string& out_file) {
  ExperimentConfig config = resolve_config(flags);
  if (round > config.rounds)
    throw Error("dump-hk: --round " + std::to_string(round) +
                " exceeds configured rounds (" + std::to_string(config.rounds) +
                ")");
  const SeedRun run = run_seed(config, config.seeds.front(), round);
  const std::string json = hk_to_json(run.state.knowledge);
  if (out_file.empty()) {
    std::printf("%s\n", json.c_str());
  } else {
    std::ofstream out(out_file);
    if (!out) throw Error("dump-hk: cannot open " + out_file);
    out << json << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic federated-learning simulator with "
               "hyper-knowledge distillation"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  std::string beta_list, algo_list;
  CLI::App* sweep =
      app.add_subcommand("sweep", "run a beta x algorithm grid");
  add_common(sweep, sweep_flags);
  sweep->add_option("--beta-list", beta_list, "comma-separated beta values");
  sweep->add_option("--algo-list", algo_list,
                    "comma-separated algorithm names");

  CLI::App* verify =
      app.add_subcommand("verify", "run the property/oracle suites");

  CommonFlags dump_flags;
  std::size_t dump_round = 1;
  std::string dump_out;
  CLI::App* dump = app.add_subcommand(
      "dump-hk", "run to a round and print the global hyper-knowledge JSON");
  add_common(dump, dump_flags);
  dump->add_option("--round", dump_round, "round to stop after")->required();
  dump->add_option("--json-out", dump_out, "write JSON here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, beta_list, algo_list);
    if (verify->parsed()) {
      const int failures = fedhkd::tools::run_verify_suites();
      std::printf("%s: %d check(s) failed\n",
                  failures == 0 ? "OK" : "FAILED", failures);
      return failures == 0 ? 0 : 1;
    }
    if (dump->parsed()) return cmd_dump_hk(dump_flags, dump_round, dump_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
