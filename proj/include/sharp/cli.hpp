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

#ifndef SHARP_CLI_HPP_
#define SHARP_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "sharp/analytics.hpp"
#include "sharp/config.hpp"

namespace sharp::cli {

// Documented exit codes.
enum ExitCode {
  kOk = 0,
  kFailure = 1,      // unexpected internal error
  kConfigError = 2,  // invalid config or malformed input file
  kDivergence = 3,   // objective left the divergence bound
  kIoError = 4,      // artifact read/write failure
};

// Runs training and writes config.json, training_record.csv, rewards.csv,
// trajectories.jsonl, policy_final.ckpt, eval_trajectories.jsonl,
// coordination_report.csv and timing.txt under config.output_dir. All
// artifacts except timing.txt are deterministic in (config, seed).
int run_train(const RunConfig& config, std::ostream& diag);

// Prints exact Shapley values, the single-ablation column and the axiom
// residuals for a game file.
int run_shapley(const std::string& game_path, std::ostream& out,
                std::ostream& diag);

// Reads a trajectory log and writes a coordination report.
int run_analyze(const std::string& log_path, CreditEstimator estimator,
                const std::string& out_path, std::ostream& diag);

// Trains one arm per sparsification level and writes sweep.csv.
int run_sweep(const RunConfig& config, const std::vector<double>& p_values,
              std::ostream& diag);

// Evaluation-only rollouts against a checkpoint; writes the eval log and a
// coordination report.
int run_eval(const RunConfig& config, const std::string& checkpoint_path,
             std::ostream& diag);

// CSV helpers shared by commands and tests.
std::string coordination_report_csv(const CoordinationReport& report);
std::string training_record_csv(const std::vector<StepRecord>& records);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Shortest round-trip decimal text for a double (canonical across the
// emitted CSV artifacts).
std::string format_double(double value);

}  // namespace sharp::cli

#endif  // SHARP_CLI_HPP_
