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

#include "sharp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "sharp/errors.hpp"
#include "sharp/game_io.hpp"
#include "sharp/trajectory_log.hpp"

namespace sharp::cli {

namespace fs = std::filesystem;

std::string format_double(double value) { return nlohmann::json(value).dump(); }

namespace {

// Maps thrown errors onto the documented exit codes.
int guard(std::ostream& diag, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    diag << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    diag << "parse error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DivergenceError& e) {
    diag << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::ios_base::failure& e) {
    diag << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    diag << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return kFailure;
  }
}

std::ofstream open_artifact(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  return out;
}

const char* role_name(std::size_t m) { return m == 0 ? "planner" : "worker"; }

}  // namespace

std::string coordination_report_csv(const CoordinationReport& report) {
  std::ostringstream out;
  out << "source,estimator,n_trajectories,n_invocations,planner_score,"
         "useful_fraction,harmful_fraction,neutral_fraction\n";
  out << report.source << "," << estimator_name(report.estimator) << ","
      << report.n_trajectories << "," << report.n_invocations << ","
      << format_double(report.planner_score) << ","
      << format_double(report.useful_fraction) << ","
      << format_double(report.harmful_fraction) << ","
      << format_double(report.neutral_fraction) << "\n";
  return out.str();
}

std::string training_record_csv(const std::vector<StepRecord>& records) {
  std::ostringstream out;
  out << "step,objective,mean_success,mean_planner_credit,harmful_fraction,"
         "useful_fraction\n";
  for (const StepRecord& r : records) {
    out << r.step << "," << format_double(r.objective) << ","
        << format_double(r.mean_success) << ","
        << format_double(r.mean_planner_credit) << ","
        << format_double(r.harmful_fraction) << ","
        << format_double(r.useful_fraction) << "\n";
  }
  return out.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "p,train_replay_count,eval_cost,final_success\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.p) << "," << row.train_replay_count << ","
        << format_double(row.eval_cost) << ","
        << format_double(row.final_success) << "\n";
  }
  return out.str();
}

int run_train(const RunConfig& config, std::ostream& diag) {
  return guard(diag, [&]() {
    config.validate();
    fs::create_directories(config.output_dir);
    const fs::path out_dir(config.output_dir);

    save_config_file(config, (out_dir / "config.json").string());

    auto trajectory_log = open_artifact(out_dir / "trajectories.jsonl");
    auto reward_table = open_artifact(out_dir / "rewards.csv");
    reward_table << "query_id,rollout,role,slot,r_broadcast,r_marginal,"
                    "r_tool,r_total\n";

    auto log_batch = [&](int, const GroupBatch& batch) {
      write_batch(batch, trajectory_log);
      for (std::size_t i = 0; i < batch.rewards.size(); ++i) {
        for (std::size_t m = 0; m < batch.rewards[i].size(); ++m) {
          const RewardBundle& b = batch.rewards[i][m];
          reward_table << batch.query.id << "," << i << "," << role_name(m)
                       << "," << m << "," << format_double(b.r_broadcast)
                       << "," << format_double(b.r_marginal) << ","
                       << format_double(b.r_tool) << ","
                       << format_double(b.r_total) << "\n";
        }
      }
    };

    TrainResult result = train(config.env, config.train, config.jobs,
                               log_batch);

    open_artifact(out_dir / "training_record.csv")
        << training_record_csv(result.records);
    save_policy_file(result.params, (out_dir / "policy_final.ckpt").string());

    EvalResult eval = evaluate_policy(config.env, result.params,
                                      config.train.seed, config.eval_episodes,
                                      config.jobs);
    {
      auto eval_log = open_artifact(out_dir / "eval_trajectories.jsonl");
      for (const Trajectory& t : eval.trajectories)
        eval_log << trajectory_to_json(t) << "\n";
    }
    CoordinationReport report = coordination_report(
        eval.trajectories, config.estimator, "eval:final");
    open_artifact(out_dir / "coordination_report.csv")
        << coordination_report_csv(report);

    // Wall-clock lives outside the deterministic artifacts.
    open_artifact(out_dir / "timing.txt")
        << "train_wall_seconds " << result.wall_seconds << "\n";

    diag << "trained " << config.train.steps << " steps; final success "
         << format_double(eval.mean_success) << "; replays "
         << result.replay_count << "\n";
    return kOk;
  });
}

int run_shapley(const std::string& game_path, std::ostream& out,
                std::ostream& diag) {
  return guard(diag, [&]() {
    CooperativeGame game = read_game_file(game_path);
    ShapleyVector exact = shapley_exact(game);
    ShapleyVector ablation = single_ablation_credit(game);
    AxiomReport axioms = axiom_report(game, exact);

    out << "n=" << game.n_agents() << "\n";
    out << "agent,shapley_exact,single_ablation\n";
    for (int m = 0; m < game.n_agents(); ++m)
      out << m << "," << format_double(exact[m]) << ","
          << format_double(ablation[m]) << "\n";
    out << "efficiency_residual=" << format_double(axioms.efficiency_residual)
        << "\n";
    out << "max_symmetry_violation="
        << format_double(axioms.max_symmetry_violation) << " (pairs="
        << axioms.symmetric_pairs << ")\n";
    out << "max_dummy_violation=" << format_double(axioms.max_dummy_violation)
        << " (dummies=" << axioms.dummy_agents << ")\n";
    return kOk;
  });
}

int run_analyze(const std::string& log_path, CreditEstimator estimator,
                const std::string& out_path, std::ostream& diag) {
  return guard(diag, [&]() {
    std::vector<Trajectory> trajectories =
        read_trajectory_log_file(log_path);
    CoordinationReport report =
        coordination_report(trajectories, estimator, "log:" + log_path);
    open_artifact(out_path) << coordination_report_csv(report);
    diag << "analyzed " << report.n_trajectories << " trajectories; planner "
         << format_double(report.planner_score) << "; useful "
         << format_double(report.useful_fraction) << "; harmful "
         << format_double(report.harmful_fraction) << "\n";
    return kOk;
  });
}

int run_sweep(const RunConfig& config, const std::vector<double>& p_values,
              std::ostream& diag) {
  return guard(diag, [&]() {
    config.validate();
    if (p_values.empty()) throw ConfigError("sweep needs at least one p value");
    fs::create_directories(config.output_dir);
    std::vector<SweepRow> rows = sweep_p(config.env, config.train, p_values,
                                         config.eval_episodes, config.jobs);
    open_artifact(fs::path(config.output_dir) / "sweep.csv")
        << sweep_csv(rows);
    for (const SweepRow& row : rows)
      diag << "p=" << format_double(row.p) << " replays="
           << row.train_replay_count << " eval_cost="
           << format_double(row.eval_cost) << " success="
           << format_double(row.final_success) << "\n";
    return kOk;
  });
}

int run_eval(const RunConfig& config, const std::string& checkpoint_path,
             std::ostream& diag) {
  return guard(diag, [&]() {
    config.validate();
    PolicyParams params = load_policy_file(checkpoint_path);
    if (!(params.shape() == PolicyShape::for_spec(config.env)))
      throw ConfigError("checkpoint shape does not match env");
    fs::create_directories(config.output_dir);
    const fs::path out_dir(config.output_dir);

    EvalResult eval = evaluate_policy(config.env, params, config.train.seed,
                                      config.eval_episodes, config.jobs);
    {
      auto eval_log = open_artifact(out_dir / "eval_trajectories.jsonl");
      for (const Trajectory& t : eval.trajectories)
        eval_log << trajectory_to_json(t) << "\n";
    }
    CoordinationReport report = coordination_report(
        eval.trajectories, config.estimator, "eval:" + checkpoint_path);
    open_artifact(out_dir / "coordination_report.csv")
        << coordination_report_csv(report);
    diag << "evaluated " << config.eval_episodes << " episodes; success "
         << format_double(eval.mean_success) << "; cost "
         << format_double(eval.mean_cost) << "\n";
    return kOk;
  });
}

}  // namespace sharp::cli
