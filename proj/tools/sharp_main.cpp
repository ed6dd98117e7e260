// Copyright 2026 The SHARP Authors
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

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sharp/cli.hpp"
#include "sharp/errors.hpp"

namespace {

// Seed precedence: --seed flag, then SHARP_SEED, then the config file.
void apply_overrides(sharp::RunConfig& config,
                     const std::optional<std::uint64_t>& seed_flag,
                     const std::string& out_flag,
                     const std::optional<std::string>& estimator_flag,
                     const std::optional<int>& jobs_flag) {
  if (seed_flag) {
    config.train.seed = *seed_flag;
  } else if (const char* env_seed = std::getenv("SHARP_SEED")) {
    try {
      config.train.seed = std::stoull(env_seed);
    } catch (const std::exception&) {
      throw sharp::ConfigError("SHARP_SEED is not a valid 64-bit integer");
    }
  }
  if (!out_flag.empty()) config.output_dir = out_flag;
  if (estimator_flag)
    config.estimator = sharp::estimator_from_name(*estimator_flag);
  if (jobs_flag) config.jobs = *jobs_flag;
}

std::vector<double> parse_p_list(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string item = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      try {
        values.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw sharp::ConfigError("bad p value '" + item + "'");
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SHARP: Shapley-credit multi-agent RL lab"};
  app.require_subcommand(1);

  std::string config_path, out_flag, game_path, log_path, checkpoint_path;
  std::string p_list = "0,0.5,1";
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> estimator_flag;
  std::optional<int> jobs_flag;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "run config (JSON)")
          ->required();
    cmd->add_option("--seed", seed_flag, "run seed (overrides SHARP_SEED)");
    cmd->add_option("--out", out_flag, "output directory");
    cmd->add_option("--estimator", estimator_flag,
                    "credit estimator: exact|ablation");
    cmd->add_option("--jobs", jobs_flag, "parallel rollout threads");
  };

  CLI::App* train = app.add_subcommand("train", "train a policy");
  add_common(train, true);

  CLI::App* shapley =
      app.add_subcommand("shapley", "Shapley values of a game file");
  shapley->add_option("game", game_path, "game file")->required();

  CLI::App* analyze =
      app.add_subcommand("analyze", "coordination report from a log");
  analyze->add_option("log", log_path, "trajectory log (JSONL)")->required();
  analyze->add_option("--out", out_flag, "report path (CSV)");
  analyze->add_option("--estimator", estimator_flag,
                      "credit estimator: exact|ablation");

  CLI::App* sweep =
      app.add_subcommand("sweep", "credit sparsification sweep");
  add_common(sweep, true);
  sweep->add_option("--p", p_list, "comma-separated p values");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, true);
  eval->add_option("--checkpoint", checkpoint_path, "policy checkpoint")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (shapley->parsed())
      return sharp::cli::run_shapley(game_path, std::cout, std::cerr);

    if (analyze->parsed()) {
      sharp::CreditEstimator estimator =
          estimator_flag ? sharp::estimator_from_name(*estimator_flag)
                         : sharp::CreditEstimator::exact;
      std::string out = out_flag.empty() ? "coordination_report.csv" : out_flag;
      return sharp::cli::run_analyze(log_path, estimator, out, std::cerr);
    }

    sharp::RunConfig config = sharp::load_config_file(config_path);
    apply_overrides(config, seed_flag, out_flag, estimator_flag, jobs_flag);

    if (train->parsed()) return sharp::cli::run_train(config, std::cerr);
    if (sweep->parsed())
      return sharp::cli::run_sweep(config, parse_p_list(p_list), std::cerr);
    if (eval->parsed())
      return sharp::cli::run_eval(config, checkpoint_path, std::cerr);
  } catch (const sharp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sharp::cli::kConfigError;
  }
  return sharp::cli::kFailure;
}
