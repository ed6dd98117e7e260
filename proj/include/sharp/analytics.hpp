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

#ifndef SHARP_ANALYTICS_HPP_
#define SHARP_ANALYTICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sharp/factworld.hpp"
#include "sharp/optim.hpp"

namespace sharp {

enum class CreditEstimator { exact, single_ablation };

// Coordination metrics over a trajectory population: the planner's mean
// credit and the classification of worker invocations by credit sign
// (positive = useful, negative = harmful, zero = neutral). The fractions
// partition the invocations; with no invocations at all they are all zero.
struct CoordinationReport {
  std::string source;
  CreditEstimator estimator = CreditEstimator::exact;
  int n_trajectories = 0;
  std::int64_t n_invocations = 0;
  double planner_score = 0.0;
  double useful_fraction = 0.0;
  double harmful_fraction = 0.0;
  double neutral_fraction = 0.0;
};

// Builds the trajectory game per trajectory and classifies every worker
// invocation. The exact estimator enumerates coalitions and requires
// 1 + |M_i| <= 12 per trajectory (throws std::invalid_argument above).
CoordinationReport coordination_report(std::span<const Trajectory> trajectories,
                                       CreditEstimator estimator,
                                       std::string source);

struct CoordinationDelta {
  double planner_score = 0.0;
  double useful_fraction = 0.0;
  double harmful_fraction = 0.0;
  double neutral_fraction = 0.0;
  std::int64_t n_invocations = 0;
};

// Signed deltas b - a for all report fields.
CoordinationDelta compare_runs(const CoordinationReport& a,
                               const CoordinationReport& b);

// One sparsification arm: training replay cost against evaluated success
// and evaluation cost (mean actions + tool calls per episode).
struct SweepRow {
  double p = 0.0;
  std::uint64_t train_replay_count = 0;
  double eval_cost = 0.0;
  double final_success = 0.0;
};

// Trains one arm per p with shared seeds and evaluates the final policy on
// eval_episodes fresh queries.
std::vector<SweepRow> sweep_p(const FactWorldSpec& spec,
                              const TrainConfig& base_config,
                              std::span<const double> p_values,
                              int eval_episodes, int jobs = 1);

const char* estimator_name(CreditEstimator estimator);
CreditEstimator estimator_from_name(const std::string& name);

}  // namespace sharp

#endif  // SHARP_ANALYTICS_HPP_
