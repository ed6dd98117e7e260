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

#ifndef SHARP_REWARD_HPP_
#define SHARP_REWARD_HPP_

#include <cstdint>
#include <vector>

#include "sharp/factworld.hpp"
#include "sharp/rng.hpp"

namespace sharp {

struct GroupBatch;  // rollout.hpp

// Weights of the tripartite reward. alpha scales the broadcast accuracy
// term, beta the marginal credit, gamma the tool-process term;
// lambda_planner scales the planner's credit; sparsify_p is the fraction of
// worker invocations that receive computed marginal credit.
struct RewardWeights {
  double alpha = 0.9;
  double beta = 0.9;
  double gamma = 0.1;
  double lambda_planner = 1.0;
  double sparsify_p = 1.0;

  void validate() const;
};

// Per-agent reward triple and its weighted aggregate.
struct RewardBundle {
  double r_broadcast = 0.0;  // {0, 1}
  double r_marginal = 0.0;   // workers in {-1, 0, 1}; planner in [0, lambda]
  double r_tool = 0.0;       // [0, 1]
  double r_total = 0.0;      // alpha*r_b + beta*r_mc + gamma*r_tool
};

// Terminal accuracy broadcast to the planner and all participating workers:
// out[i][m] for m in 0..worker_count(i).
std::vector<std::vector<double>> broadcast_reward(const GroupBatch& batch);

// Mean validity over the agent's tool calls; 0 when the agent made none
// (in particular the planner, which never calls tools here).
double tool_process_reward(const Trajectory& trajectory, AgentId agent);

// R_acc(tau) - R_acc(tau without the worker), evaluated by counterfactual
// replay through the trajectory game. Workers only; pass the planner
// through planner_credit instead.
double marginal_credit(const Trajectory& trajectory, int worker_slot,
                       const CooperativeGame& game);

// lambda * mean over workers of max(credit, 0); 0 when no workers were
// dispatched.
double planner_credit(const std::vector<double>& worker_credits,
                      double lambda_planner);

// Per-(trajectory, worker) marginal credits with credit sparsification:
// each invocation is independently selected with probability p (one draw
// per invocation, trajectory-major order); unselected invocations get 0
// without triggering a replay. replays counts the counterfactual
// evaluations actually performed.
struct CreditTable {
  std::vector<std::vector<double>> worker_credit;  // [i][slot-1]
  std::uint64_t replays = 0;
};

CreditTable sparsified_credits(const GroupBatch& batch, double p,
                               DrawSource& draws);

double aggregate(double r_broadcast, double r_marginal, double r_tool,
                 const RewardWeights& weights);

// Fills batch.rewards for every (trajectory, agent): broadcast + tool
// terms, sparsified marginal credit for workers, planner credit over the
// post-sparsification worker credits, and the weighted totals. With
// beta == 0 the credit machinery is skipped entirely (zero replays).
// Returns the number of counterfactual replays performed.
std::uint64_t compute_rewards(GroupBatch& batch, const RewardWeights& weights,
                              std::uint64_t sparsify_key);

}  // namespace sharp

#endif  // SHARP_REWARD_HPP_
