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

#include "sharp/reward.hpp"

#include <stdexcept>

#include "sharp/errors.hpp"
#include "sharp/rollout.hpp"

namespace sharp {

void RewardWeights::validate() const {
  if (alpha < 0.0) throw ConfigError("reward.alpha must be >= 0");
  if (beta < 0.0) throw ConfigError("reward.beta must be >= 0");
  if (gamma < 0.0) throw ConfigError("reward.gamma must be >= 0");
  if (lambda_planner < 0.0)
    throw ConfigError("reward.lambda_planner must be >= 0");
  if (sparsify_p < 0.0 || sparsify_p > 1.0)
    throw ConfigError("reward.sparsify_p must be in [0, 1]");
}

std::vector<std::vector<double>> broadcast_reward(const GroupBatch& batch) {
  std::vector<std::vector<double>> out(batch.trajectories.size());
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const Trajectory& trajectory = batch.trajectories[i];
    const double acc = terminal_accuracy(trajectory);
    out[i].assign(1 + trajectory.worker_count(), acc);
  }
  return out;
}

double tool_process_reward(const Trajectory& trajectory, AgentId agent) {
  if (agent.role == Role::planner) return 0.0;  // no tool calls
  if (agent.slot < 1 || agent.slot > trajectory.worker_count())
    throw std::invalid_argument("agent did not participate in trajectory");
  const auto& trace = trajectory.worker_traces[agent.slot - 1];
  if (trace.empty()) return 0.0;
  double sum = 0.0;
  for (const ToolCallRecord& record : trace) sum += record.validity;
  return sum / static_cast<double>(trace.size());
}

double marginal_credit(const Trajectory& trajectory, int worker_slot,
                       const CooperativeGame& game) {
  if (worker_slot < 1 || worker_slot > trajectory.worker_count())
    throw std::invalid_argument(
        "marginal_credit is defined for participating workers only");
  const double r_acc = terminal_accuracy(trajectory);
  const Coalition rest = game.grand_coalition().without(worker_slot);
  return r_acc - game.value(rest);
}

double planner_credit(const std::vector<double>& worker_credits,
                      double lambda_planner) {
  if (worker_credits.empty()) return 0.0;
  double sum = 0.0;
  for (double credit : worker_credits) sum += credit > 0.0 ? credit : 0.0;
  return lambda_planner * sum / static_cast<double>(worker_credits.size());
}

CreditTable sparsified_credits(const GroupBatch& batch, double p,
                               DrawSource& draws) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("sparsify probability must be in [0, 1]");
  CreditTable table;
  table.worker_credit.resize(batch.trajectories.size());
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const Trajectory& trajectory = batch.trajectories[i];
    const int workers = trajectory.worker_count();
    table.worker_credit[i].assign(workers, 0.0);
    if (workers == 0) continue;
    CooperativeGame game = trajectory_game(trajectory);
    for (int slot = 1; slot <= workers; ++slot) {
      const bool selected = draws.u01() < p;
      if (!selected) continue;
      table.worker_credit[i][slot - 1] =
          marginal_credit(trajectory, slot, game);
    }
    table.replays += game.evaluations();
  }
  return table;
}

double aggregate(double r_broadcast, double r_marginal, double r_tool,
                 const RewardWeights& weights) {
  return weights.alpha * r_broadcast + weights.beta * r_marginal +
         weights.gamma * r_tool;
}

std::uint64_t compute_rewards(GroupBatch& batch, const RewardWeights& weights,
                              std::uint64_t sparsify_key) {
  weights.validate();
  const std::size_t n = batch.trajectories.size();

  CreditTable credits;
  if (weights.beta != 0.0) {
    Rng draws(sparsify_key);
    credits = sparsified_credits(batch, weights.sparsify_p, draws);
  } else {
    credits.worker_credit.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      credits.worker_credit[i].assign(batch.trajectories[i].worker_count(),
                                      0.0);
  }

  batch.rewards.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const Trajectory& trajectory = batch.trajectories[i];
    const int workers = trajectory.worker_count();
    const double acc = terminal_accuracy(trajectory);

    std::vector<RewardBundle> bundles(1 + workers);
    bundles[0].r_broadcast = acc;
    bundles[0].r_marginal =
        planner_credit(credits.worker_credit[i], weights.lambda_planner);
    bundles[0].r_tool = tool_process_reward(trajectory, AgentId::planner());
    for (int slot = 1; slot <= workers; ++slot) {
      bundles[slot].r_broadcast = acc;
      bundles[slot].r_marginal = credits.worker_credit[i][slot - 1];
      bundles[slot].r_tool =
          tool_process_reward(trajectory, AgentId::worker(slot));
    }
    for (RewardBundle& bundle : bundles)
      bundle.r_total = aggregate(bundle.r_broadcast, bundle.r_marginal,
                                 bundle.r_tool, weights);
    batch.rewards[i] = std::move(bundles);
  }
  return credits.replays;
}

}  // namespace sharp
