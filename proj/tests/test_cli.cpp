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

#include <cstdlib>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sharp/cli.hpp"
#include "sharp/config.hpp"
#include "sharp/errors.hpp"
#include "sharp/trajectory_log.hpp"

using namespace sharp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("sharp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

RunConfig tiny_config(const fs::path& out_dir) {
  RunConfig config;
  config.train.steps = 3;
  config.train.learning_rate = 0.3;
  config.train.seed = 5;
  config.eval_episodes = 16;
  config.output_dir = out_dir.string();
  return config;
}

}  // namespace

TEST_CASE("config defaults carry the tuned constants exactly") {
  RunConfig config;
  CHECK(config.train.weights.alpha == 0.9);
  CHECK(config.train.weights.beta == 0.9);
  CHECK(config.train.weights.gamma == 0.1);
  CHECK(config.train.epsilon_clip == 0.2);
  CHECK(config.train.delta_stab == 1e-6);
  CHECK(config.train.group_size == 8);
  CHECK(config.train.learning_rate == 1e-5);

  SUBCASE("the constants survive a serialization round trip") {
    RunConfig parsed = config_from_json(config_to_json(config));
    CHECK(parsed.train.weights.alpha == 0.9);
    CHECK(parsed.train.weights.beta == 0.9);
    CHECK(parsed.train.weights.gamma == 0.1);
    CHECK(parsed.train.epsilon_clip == 0.2);
    CHECK(parsed.train.delta_stab == 1e-6);
    CHECK(parsed.train.group_size == 8);
    CHECK(parsed.train.learning_rate == 1e-5);
  }
  SUBCASE("serialization is canonical") {
    std::string text = config_to_json(config);
    CHECK(config_to_json(config_from_json(text)) == text);
  }
}

TEST_CASE("config parsing rejects unknown and malformed fields") {
  CHECK_THROWS_WITH_AS(config_from_json("{\"trian\":{}}"),
                       "unknown key 'trian'", ConfigError);
  CHECK_THROWS_AS(config_from_json("{\"train\":{\"steps\":\"many\"}}"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json("not json"), ConfigError);

  SUBCASE("invalid values are reported by field") {
    RunConfig config;
    config.train.weights.sparsify_p = 1.5;
    CHECK_THROWS_WITH_AS(config.validate(),
                         "reward.sparsify_p must be in [0, 1]", ConfigError);
  }
}

TEST_CASE("run_shapley prints values and flags malformed files") {
  fs::path dir = temp_dir("shapley");

  SUBCASE("majority game") {
    std::ofstream game(dir / "majority.game");
    game << "n=3\n";
    for (int mask = 0; mask < 8; ++mask)
      game << mask << " " << (__builtin_popcount(mask) >= 2 ? 1 : 0) << "\n";
    game.close();

    std::ostringstream out, diag;
    int code = cli::run_shapley((dir / "majority.game").string(), out, diag);
    CHECK(code == cli::kOk);
    CHECK(out.str().find("n=3") != std::string::npos);
    CHECK(out.str().find("0.3333333333333333") != std::string::npos);
  }
  SUBCASE("missing coalition exits nonzero and names the line") {
    std::ofstream game(dir / "broken.game");
    game << "n=2\n0 0\n1 1\n";
    game.close();
    std::ostringstream out, diag;
    int code = cli::run_shapley((dir / "broken.game").string(), out, diag);
    CHECK(code == cli::kConfigError);
    CHECK(diag.str().find("line") != std::string::npos);
  }
}

TEST_CASE("run_train writes deterministic artifacts") {
  fs::path dir_a = temp_dir("train_a");
  fs::path dir_b = temp_dir("train_b");

  RunConfig config_a = tiny_config(dir_a);
  RunConfig config_b = tiny_config(dir_b);
  config_b.jobs = 4;

  std::ostringstream diag;
  REQUIRE(cli::run_train(config_a, diag) == cli::kOk);
  REQUIRE(cli::run_train(config_b, diag) == cli::kOk);

  for (const char* artifact :
       {"training_record.csv", "trajectories.jsonl", "rewards.csv",
        "policy_final.ckpt", "eval_trajectories.jsonl",
        "coordination_report.csv"}) {
    CAPTURE(artifact);
    CHECK(slurp(dir_a / artifact) == slurp(dir_b / artifact));
    CHECK(!slurp(dir_a / artifact).empty());
  }

  SUBCASE("persisted config reproduces the run") {
    RunConfig reloaded = load_config_file((dir_a / "config.json").string());
    fs::path dir_c = temp_dir("train_c");
    reloaded.output_dir = dir_c.string();
    REQUIRE(cli::run_train(reloaded, diag) == cli::kOk);
    CHECK(slurp(dir_a / "training_record.csv") ==
          slurp(dir_c / "training_record.csv"));
    CHECK(slurp(dir_a / "policy_final.ckpt") ==
          slurp(dir_c / "policy_final.ckpt"));
  }
  SUBCASE("trajectory logs re-serialize byte-identically") {
    std::string original = slurp(dir_a / "trajectories.jsonl");
    std::istringstream in(original);
    std::vector<Trajectory> trajectories = read_trajectory_log(in);
    CHECK(!trajectories.empty());
    std::ostringstream rewritten;
    for (const Trajectory& t : trajectories)
      rewritten << trajectory_to_json(t) << "\n";
    // The original interleaves batch headers; strip them for comparison.
    std::istringstream lines(original);
    std::ostringstream stripped;
    std::string line;
    while (std::getline(lines, line))
      if (line.find("\"batch\"") == std::string::npos)
        stripped << line << "\n";
    CHECK(rewritten.str() == stripped.str());
  }
}

TEST_CASE("run_train exit codes") {
  SUBCASE("invalid config") {
    RunConfig config = tiny_config(temp_dir("exit_cfg"));
    config.train.group_size = 1;
    std::ostringstream diag;
    CHECK(cli::run_train(config, diag) == cli::kConfigError);
    CHECK(diag.str().find("train.group_size") != std::string::npos);
  }
  SUBCASE("divergence guard") {
    RunConfig config = tiny_config(temp_dir("exit_div"));
    config.train.divergence_bound = 1e-12;
    std::ostringstream diag;
    CHECK(cli::run_train(config, diag) == cli::kDivergence);
  }
  SUBCASE("io failure") {
    fs::path dir = temp_dir("exit_io");
    std::ofstream(dir / "blocker") << "not a directory";
    RunConfig config = tiny_config(dir / "blocker" / "out");
    std::ostringstream diag;
    CHECK(cli::run_train(config, diag) == cli::kIoError);
  }
}

TEST_CASE("run_analyze and run_eval round trip") {
  fs::path dir = temp_dir("analyze");
  RunConfig config = tiny_config(dir);
  std::ostringstream diag;
  REQUIRE(cli::run_train(config, diag) == cli::kOk);

  SUBCASE("analyze an emitted log") {
    std::ostringstream diag2;
    int code = cli::run_analyze((dir / "eval_trajectories.jsonl").string(),
                                CreditEstimator::exact,
                                (dir / "report2.csv").string(), diag2);
    CHECK(code == cli::kOk);
    // Same trajectories, same estimator: identical numbers after the
    // source column.
    auto body_after_source = [](const std::string& csv) {
      std::string row = csv.substr(csv.find('\n') + 1);
      return row.substr(row.find(','));
    };
    CHECK(body_after_source(slurp(dir / "coordination_report.csv")) ==
          body_after_source(slurp(dir / "report2.csv")));
  }
  SUBCASE("evaluate the emitted checkpoint") {
    RunConfig eval_config = config;
    eval_config.output_dir = (dir / "eval_out").string();
    std::ostringstream diag2;
    int code = cli::run_eval(eval_config,
                             (dir / "policy_final.ckpt").string(), diag2);
    CHECK(code == cli::kOk);
    CHECK(slurp(dir / "eval_out" / "eval_trajectories.jsonl") ==
          slurp(dir / "eval_trajectories.jsonl"));
  }
  SUBCASE("schema violations name the line") {
    std::ofstream bad(dir / "bad.jsonl");
    bad << "{\"query_id\":1}\n";
    bad.close();
    std::ostringstream diag2;
    int code = cli::run_analyze((dir / "bad.jsonl").string(),
                                CreditEstimator::exact,
                                (dir / "bad.csv").string(), diag2);
    CHECK(code == cli::kConfigError);
    CHECK(diag2.str().find("line 1") != std::string::npos);
  }
}

TEST_CASE("run_sweep emits the sweep table") {
  fs::path dir = temp_dir("sweep");
  RunConfig config = tiny_config(dir);
  config.eval_episodes = 10;
  std::ostringstream diag;
  int code = cli::run_sweep(config, {0.0, 1.0}, diag);
  CHECK(code == cli::kOk);
  std::string table = slurp(dir / "sweep.csv");
  CHECK(table.find("p,train_replay_count,eval_cost,final_success") !=
        std::string::npos);
  CHECK(table.find("\n0.0,0,") != std::string::npos);  // p=0 row, no replays
}

TEST_CASE("seed precedence: flag over environment over config") {
  fs::path dir = temp_dir("seed");
  RunConfig config = tiny_config(dir / "base");
  config.train.steps = 1;
  config.eval_episodes = 4;
  config.train.seed = 11;
  save_config_file(config, (dir / "config.json").string());

  auto run = [&](const std::string& extra, const std::string& out_name,
                 bool with_env) {
    fs::path out = dir / out_name;
    std::string cmd = std::string(with_env ? "SHARP_SEED=22 " : "") +
                      SHARP_CLI_BIN + " train --config " +
                      (dir / "config.json").string() + " --out " +
                      out.string() + extra + " >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    return load_config_file((out / "config.json").string()).train.seed;
  };

  CHECK(run("", "from_config", false) == 11);
  CHECK(run("", "from_env", true) == 22);
  CHECK(run(" --seed 33", "from_flag", true) == 33);
}
