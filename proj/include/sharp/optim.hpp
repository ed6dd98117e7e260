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

#ifndef SHARP_OPTIM_HPP_
#define SHARP_OPTIM_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "sharp/policy.hpp"
#include "sharp/reward.hpp"
#include "sharp/rollout.hpp"

namespace sharp {

enum class OptimizerKind { gradient_ascent, adamw };

struct TrainConfig {
  RewardWeights weights;
  int group_size = 8;
  double epsilon_clip = 0.2;
  double delta_stab = 1e-6;
  double learning_rate = 1e-5;
  int steps = 0;
  std::uint64_t seed = 1;
  OptimizerKind optimizer = OptimizerKind::gradient_ascent;
  bool pool_worker_stats = false;  // pool all worker slots into one identity
  double divergence_bound = 1e6;

  void validate() const;
};

// Group mean / population standard deviation of the aggregate reward for
// one agent identity, over the trajectories where it participated.
struct StatsEntry {
  double mu = 0.0;
  double sigma = 0.0;
  int n_samples = 0;
};

// Identities are keyed by (role, slot); with pooled_workers all worker
// slots share one identity.
struct GroupStats {
  std::vector<StatsEntry> by_slot;  // index 0 = planner, s = worker slot s
  bool pooled_workers = false;
  StatsEntry pooled_worker_entry;

  const StatsEntry& entry_for(int slot) const {
    return (pooled_workers && slot > 0) ? pooled_worker_entry : by_slot[slot];
  }
};

GroupStats group_stats(const GroupBatch& batch, bool pool_workers = false);

// Group-relative advantage (r - mu) / (sigma + delta).
double advantage(double r_total, const StatsEntry& stats, double delta);

// Fills batch.advantages from batch.rewards and the group statistics.
void fill_advantages(GroupBatch& batch, const GroupStats& stats, double delta);

// exp(sum log pi_theta - sum log pi_theta_old) over the agent's actions,
// computed in log space and exponentiated once.
double policy_ratio(const PolicyParams& params, const PolicyParams& old_params,
                    const Trajectory& trajectory, AgentId agent);

// min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv).
double clipped_term(double ratio, double adv, double epsilon);

// (1/G) sum_i (1/|{0} + M_i|) sum_m clipped_term(ratio_im, adv_im, eps).
// Requires rewards and advantages to be filled; old policy from the batch.
double sharp_objective(const GroupBatch& batch, const PolicyParams& params,
                       const TrainConfig& config);

// Exact gradient of sharp_objective in the logits, treating advantages and
// the old policy as constants. Terms where the clipped branch is strictly
// smaller contribute zero.
PolicyGradient objective_gradient(const GroupBatch& batch,
                                  const PolicyParams& params,
                                  const TrainConfig& config);

struct StepRecord {
  int step = 0;
  double objective = 0.0;
  double mean_success = 0.0;
  double mean_planner_credit = 0.0;
  // Fractions of worker invocations by sign of the credit used for training.
  double harmful_fraction = 0.0;
  double useful_fraction = 0.0;
};

struct TrainResult {
  std::vector<StepRecord> records;
  PolicyParams params;
  std::uint64_t replay_count = 0;
  double wall_seconds = 0.0;
};

// Full training loop: collect -> reward -> stats -> advantages -> one
// ascent step per batch, for config.steps batches (query id = step index).
// Deterministic under (spec, config); jobs only parallelizes rollouts.
// on_batch, when set, sees each completed batch before the update.
// Throws DivergenceError when |J| leaves config.divergence_bound.
TrainResult train(const FactWorldSpec& spec, const TrainConfig& config,
                  int jobs = 1,
                  const std::function<void(int, const GroupBatch&)>& on_batch =
                      nullptr);

}  // namespace sharp

#endif  // SHARP_OPTIM_HPP_
