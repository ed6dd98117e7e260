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

#ifndef SHARP_ROLLOUT_HPP_
#define SHARP_ROLLOUT_HPP_

#include <cstdint>
#include <vector>

#include "sharp/factworld.hpp"
#include "sharp/policy.hpp"
#include "sharp/reward.hpp"
#include "sharp/rng.hpp"

namespace sharp {

// G trajectories for one query, sampled under a frozen policy snapshot.
// rewards and advantages are indexed [i][m] with m = 0 for the planner and
// m = 1..worker_count(i) for worker slots; they are filled by the reward
// and optimization stages.
struct GroupBatch {
  QueryInstance query;
  std::vector<Trajectory> trajectories;
  PolicyParams old_params;
  std::vector<std::vector<RewardBundle>> rewards;
  std::vector<std::vector<double>> advantages;
  std::uint64_t base_seed = 0;
  int group_size = 0;
};

// Runs one episode: the planner loop dispatching workers, each worker
// making exactly worker_step_budget tool calls. All draws (policy samples
// and tool outcomes) come from the given source, in a fixed order.
Trajectory run_episode(const FactWorldSpec& spec, const PolicyParams& params,
                       QueryInstance query, DrawSource& draws);

// run_episode with a fresh recording stream keyed by stream_key; the
// trajectory carries the key and the recorded draws.
Trajectory run_episode_keyed(const FactWorldSpec& spec,
                             const PolicyParams& params, QueryInstance query,
                             std::uint64_t stream_key);

// Algorithm sampling phase: snapshots params, samples the query from the
// stream keyed by (base_seed, query_id), and collects G rollouts whose
// streams are keyed by (base_seed, query_id, i). Rollouts are independent
// and may run on up to `jobs` threads; the result is identical for any
// jobs value. Throws ConfigError when G < 2.
GroupBatch collect_group(const FactWorldSpec& spec, const PolicyParams& params,
                         int G, std::uint64_t base_seed,
                         std::uint64_t query_id, int jobs = 1);

// Sum over all participating agents of agent_logprob_sum: the
// theta-dependent part of log P(tau).
double joint_logprob(const PolicyParams& params, const Trajectory& trajectory);

// Evaluation-only rollouts against fixed params (no snapshot bookkeeping).
struct EvalResult {
  std::vector<Trajectory> trajectories;
  double mean_success = 0.0;
  double mean_cost = 0.0;  // mean planner actions + tool calls per episode
};

EvalResult evaluate_policy(const FactWorldSpec& spec,
                           const PolicyParams& params, std::uint64_t seed,
                           int episodes, int jobs = 1);

}  // namespace sharp

#endif  // SHARP_ROLLOUT_HPP_
