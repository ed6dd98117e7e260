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

#include "sharp/analytics.hpp"

#include <cmath>
#include <stdexcept>

#include "sharp/errors.hpp"
#include "sharp/game.hpp"
#include "sharp/rollout.hpp"

namespace sharp {

namespace {

// Credits within this band count as neutral; exact Shapley on a 0/1 game is
// rational arithmetic done in double, so true zeros may carry rounding dust.
constexpr double kNeutralTol = 1e-12;

constexpr int kMaxExactReportAgents = 12;

}  // namespace

CoordinationReport coordination_report(
    std::span<const Trajectory> trajectories, CreditEstimator estimator,
    std::string source) {
  CoordinationReport report;
  report.source = std::move(source);
  report.estimator = estimator;
  report.n_trajectories = static_cast<int>(trajectories.size());

  double planner_sum = 0.0;
  std::int64_t useful = 0, harmful = 0, neutral = 0;

  for (const Trajectory& trajectory : trajectories) {
    const int agents = 1 + trajectory.worker_count();
    if (estimator == CreditEstimator::exact && agents > kMaxExactReportAgents)
      throw std::invalid_argument(
          "exact estimator supports at most " +
          std::to_string(kMaxExactReportAgents) + " agents per trajectory");

    CooperativeGame game = trajectory_game(trajectory);
    ShapleyVector credit = estimator == CreditEstimator::exact
                               ? shapley_exact(game)
                               : single_ablation_credit(game);
    planner_sum += credit[0];
    for (int slot = 1; slot < agents; ++slot) {
      if (credit[slot] > kNeutralTol)
        ++useful;
      else if (credit[slot] < -kNeutralTol)
        ++harmful;
      else
        ++neutral;
    }
  }

  if (report.n_trajectories > 0)
    report.planner_score = planner_sum / report.n_trajectories;
  report.n_invocations = useful + harmful + neutral;
  if (report.n_invocations > 0) {
    const double total = static_cast<double>(report.n_invocations);
    report.useful_fraction = useful / total;
    report.harmful_fraction = harmful / total;
    report.neutral_fraction = neutral / total;
  }
  return report;
}

CoordinationDelta compare_runs(const CoordinationReport& a,
                               const CoordinationReport& b) {
  CoordinationDelta delta;
  delta.planner_score = b.planner_score - a.planner_score;
  delta.useful_fraction = b.useful_fraction - a.useful_fraction;
  delta.harmful_fraction = b.harmful_fraction - a.harmful_fraction;
  delta.neutral_fraction = b.neutral_fraction - a.neutral_fraction;
  delta.n_invocations = b.n_invocations - a.n_invocations;
  return delta;
}

std::vector<SweepRow> sweep_p(const FactWorldSpec& spec,
                              const TrainConfig& base_config,
                              std::span<const double> p_values,
                              int eval_episodes, int jobs) {
  std::vector<SweepRow> rows;
  rows.reserve(p_values.size());
  for (double p : p_values) {
    if (p < 0.0 || p > 1.0)
      throw ConfigError("sweep p values must be in [0, 1]");
    TrainConfig config = base_config;
    config.weights.sparsify_p = p;
    TrainResult trained = train(spec, config, jobs);
    EvalResult eval = evaluate_policy(spec, trained.params, config.seed,
                                      eval_episodes, jobs);
    SweepRow row;
    row.p = p;
    row.train_replay_count = trained.replay_count;
    row.eval_cost = eval.mean_cost;
    row.final_success = eval.mean_success;
    rows.push_back(row);
  }
  return rows;
}

const char* estimator_name(CreditEstimator estimator) {
  return estimator == CreditEstimator::exact ? "exact" : "ablation";
}

CreditEstimator estimator_from_name(const std::string& name) {
  if (name == "exact") return CreditEstimator::exact;
  if (name == "ablation" || name == "single-ablation")
    return CreditEstimator::single_ablation;
  throw ConfigError("unknown estimator '" + name +
                    "' (expected exact|ablation)");
}

}  // namespace sharp
