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

#include "sharp/rollout.hpp"

#include <thread>

#include "sharp/errors.hpp"

namespace sharp {

namespace {

// Stream salts. Rollout streams use the rollout index directly, so salts
// for other streams sit far above any realistic G or episode count.
constexpr std::uint64_t kQueryStreamSalt = 0x51554552594c4142ULL;
constexpr std::uint64_t kEvalQuerySalt = 0x4556414c51455259ULL;
constexpr std::uint64_t kEvalRolloutSalt = 0x4556414c524f4c4cULL;

Trajectory drive_episode(const FactWorldSpec& spec, const PolicyParams& params,
                         QueryInstance query, DrawSource& draws) {
  Episode episode(spec, query);
  while (!episode.terminal()) {
    const int covered =
        episode.survivors().intersect(query.required).count();
    const int ctx = planner_context_bucket(spec, episode.turn(), covered);
    Eigen::VectorXd dist =
        action_distribution(params, {Role::planner, ctx});
    const int action = sample_action(dist, draws);

    if (action == spec.answer_action()) {
      episode.planner_step(PlannerAction::answer_with(query.required), ctx);
      continue;
    }

    episode.planner_step(PlannerAction::dispatch(action), ctx);
    const int slot = episode.open_worker();
    const FactSet target = episode.subtask_target(slot);
    for (int step = 0; step < spec.worker_step_budget; ++step) {
      const bool covered_target = episode.survivors().covers(target);
      const int wctx = worker_context_bucket(spec, action, step, covered_target);
      Eigen::VectorXd wdist =
          action_distribution(params, {Role::worker, wctx});
      const int tool = sample_action(wdist, draws);
      episode.worker_tool_call(slot, tool, draws, wctx);
    }
    episode.close_worker();
  }
  return episode.take_trajectory();
}

}  // namespace

Trajectory run_episode(const FactWorldSpec& spec, const PolicyParams& params,
                       QueryInstance query, DrawSource& draws) {
  return drive_episode(spec, params, query, draws);
}

Trajectory run_episode_keyed(const FactWorldSpec& spec,
                             const PolicyParams& params, QueryInstance query,
                             std::uint64_t stream_key) {
  std::vector<double> trace;
  RecordingSource draws(stream_key, &trace);
  Trajectory trajectory = drive_episode(spec, params, query, draws);
  trajectory.rng_trace = std::move(trace);
  trajectory.stream_key = stream_key;
  return trajectory;
}

namespace {

// Runs fn(i) for i in [0, count) on up to `jobs` threads; each index is
// handled exactly once, so the assembled result is order-independent.
template <typename Fn>
void parallel_for_index(int count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int n_threads = jobs < count ? jobs : count;
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    threads.emplace_back([&, t]() {
      for (int i = t; i < count; i += n_threads) fn(i);
    });
  }
  for (auto& thread : threads) thread.join();
}

}  // namespace

GroupBatch collect_group(const FactWorldSpec& spec, const PolicyParams& params,
                         int G, std::uint64_t base_seed,
                         std::uint64_t query_id, int jobs) {
  if (G < 2)
    throw ConfigError("group size must be >= 2 for group statistics");

  GroupBatch batch;
  batch.group_size = G;
  batch.base_seed = base_seed;
  batch.old_params = params;  // frozen snapshot

  Rng query_draws(derive_seed(base_seed, query_id, kQueryStreamSalt));
  batch.query = sample_query(spec, query_id, query_draws);

  batch.trajectories.resize(G);
  parallel_for_index(G, jobs, [&](int i) {
    const std::uint64_t key =
        derive_seed(base_seed, query_id, static_cast<std::uint64_t>(i));
    batch.trajectories[i] =
        run_episode_keyed(spec, batch.old_params, batch.query, key);
  });
  return batch;
}

double joint_logprob(const PolicyParams& params,
                     const Trajectory& trajectory) {
  double sum = agent_logprob_sum(params, trajectory, AgentId::planner());
  for (int slot = 1; slot <= trajectory.worker_count(); ++slot)
    sum += agent_logprob_sum(params, trajectory, AgentId::worker(slot));
  return sum;
}

EvalResult evaluate_policy(const FactWorldSpec& spec,
                           const PolicyParams& params, std::uint64_t seed,
                           int episodes, int jobs) {
  EvalResult result;
  result.trajectories.resize(episodes);
  parallel_for_index(episodes, jobs, [&](int k) {
    Rng query_draws(
        derive_seed(seed, kEvalQuerySalt, static_cast<std::uint64_t>(k)));
    QueryInstance query =
        sample_query(spec, static_cast<std::uint64_t>(k), query_draws);
    const std::uint64_t key =
        derive_seed(seed, kEvalRolloutSalt, static_cast<std::uint64_t>(k));
    result.trajectories[k] = run_episode_keyed(spec, params, query, key);
  });
  double success = 0.0, cost = 0.0;
  for (const Trajectory& t : result.trajectories) {
    success += terminal_accuracy(t);
    cost += t.action_count();
  }
  if (episodes > 0) {
    result.mean_success = success / episodes;
    result.mean_cost = cost / episodes;
  }
  return result;
}

}  // namespace sharp
