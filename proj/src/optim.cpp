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

#include "sharp/optim.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "sharp/errors.hpp"

namespace sharp {

void TrainConfig::validate() const {
  weights.validate();
  if (group_size < 2) throw ConfigError("train.group_size must be >= 2");
  if (epsilon_clip <= 0.0) throw ConfigError("train.epsilon_clip must be > 0");
  if (delta_stab <= 0.0) throw ConfigError("train.delta_stab must be > 0");
  if (learning_rate <= 0.0)
    throw ConfigError("train.learning_rate must be > 0");
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  if (divergence_bound <= 0.0)
    throw ConfigError("train.divergence_bound must be > 0");
}

namespace {

// Two-pass mean / population deviation. Constant samples (including the
// single-sample case) are exactly centered with sigma exactly 0.
StatsEntry stats_of(const std::vector<double>& values) {
  StatsEntry entry;
  entry.n_samples = static_cast<int>(values.size());
  if (values.empty()) return entry;
  bool constant = true;
  for (double v : values) constant = constant && (v == values.front());
  if (constant) {
    entry.mu = values.front();
    entry.sigma = 0.0;
    return entry;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  entry.mu = sum / entry.n_samples;
  double var = 0.0;
  for (double v : values) var += (v - entry.mu) * (v - entry.mu);
  entry.sigma = std::sqrt(var / entry.n_samples);
  return entry;
}

}  // namespace

GroupStats group_stats(const GroupBatch& batch, bool pool_workers) {
  if (batch.rewards.size() != batch.trajectories.size())
    throw std::logic_error("rewards must be populated before group_stats");

  int max_slot = 0;
  for (const Trajectory& t : batch.trajectories)
    max_slot = std::max(max_slot, t.worker_count());

  // Rewards per identity, over the trajectories containing it.
  std::vector<std::vector<double>> values(max_slot + 1);
  std::vector<double> pooled;
  for (std::size_t i = 0; i < batch.rewards.size(); ++i) {
    for (std::size_t m = 0; m < batch.rewards[i].size(); ++m) {
      const double r = batch.rewards[i][m].r_total;
      values[m].push_back(r);
      if (m > 0) pooled.push_back(r);
    }
  }

  GroupStats stats;
  stats.pooled_workers = pool_workers;
  stats.by_slot.resize(max_slot + 1);
  for (int m = 0; m <= max_slot; ++m) stats.by_slot[m] = stats_of(values[m]);
  stats.pooled_worker_entry = stats_of(pooled);
  return stats;
}

double advantage(double r_total, const StatsEntry& stats, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("delta must be > 0");
  return (r_total - stats.mu) / (stats.sigma + delta);
}

void fill_advantages(GroupBatch& batch, const GroupStats& stats,
                     double delta) {
  batch.advantages.assign(batch.rewards.size(), {});
  for (std::size_t i = 0; i < batch.rewards.size(); ++i) {
    batch.advantages[i].resize(batch.rewards[i].size());
    for (std::size_t m = 0; m < batch.rewards[i].size(); ++m)
      batch.advantages[i][m] =
          advantage(batch.rewards[i][m].r_total,
                    stats.entry_for(static_cast<int>(m)), delta);
  }
}

double policy_ratio(const PolicyParams& params, const PolicyParams& old_params,
                    const Trajectory& trajectory, AgentId agent) {
  const double log_new = agent_logprob_sum(params, trajectory, agent);
  const double log_old = agent_logprob_sum(old_params, trajectory, agent);
  return std::exp(log_new - log_old);
}

double clipped_term(double ratio, double adv, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be > 0");
  const double lo = 1.0 - epsilon, hi = 1.0 + epsilon;
  const double clipped = ratio < lo ? lo : (ratio > hi ? hi : ratio);
  return std::min(ratio * adv, clipped * adv);
}

namespace {

AgentId agent_for(std::size_t m) {
  return m == 0 ? AgentId::planner() : AgentId::worker(static_cast<int>(m));
}

}  // namespace

double sharp_objective(const GroupBatch& batch, const PolicyParams& params,
                       const TrainConfig& config) {
  if (batch.advantages.size() != batch.trajectories.size())
    throw std::logic_error("advantages must be populated");
  const int G = static_cast<int>(batch.trajectories.size());
  double objective = 0.0;
  for (int i = 0; i < G; ++i) {
    const Trajectory& trajectory = batch.trajectories[i];
    const std::size_t agents = batch.advantages[i].size();
    double inner = 0.0;
    for (std::size_t m = 0; m < agents; ++m) {
      const double ratio =
          policy_ratio(params, batch.old_params, trajectory, agent_for(m));
      inner += clipped_term(ratio, batch.advantages[i][m],
                            config.epsilon_clip);
    }
    objective += inner / static_cast<double>(agents);
  }
  return objective / static_cast<double>(G);
}

PolicyGradient objective_gradient(const GroupBatch& batch,
                                  const PolicyParams& params,
                                  const TrainConfig& config) {
  if (batch.advantages.size() != batch.trajectories.size())
    throw std::logic_error("advantages must be populated");
  const int G = static_cast<int>(batch.trajectories.size());
  PolicyGradient gradient = PolicyGradient::zeros(params.shape());
  for (int i = 0; i < G; ++i) {
    const Trajectory& trajectory = batch.trajectories[i];
    const std::size_t agents = batch.advantages[i].size();
    const double scale_i = 1.0 / (static_cast<double>(G) * agents);
    for (std::size_t m = 0; m < agents; ++m) {
      const AgentId agent = agent_for(m);
      const double adv = batch.advantages[i][m];
      if (adv == 0.0) continue;
      const double ratio =
          policy_ratio(params, batch.old_params, trajectory, agent);
      const double lo = 1.0 - config.epsilon_clip;
      const double hi = 1.0 + config.epsilon_clip;
      const double clipped = ratio < lo ? lo : (ratio > hi ? hi : ratio);
      // Gradient of min(r*A, clip(r)*A): zero when the clipped branch is
      // strictly smaller, A * r * grad(log pi) otherwise.
      if (clipped * adv < ratio * adv) continue;
      PolicyGradient score = grad_agent_logprob(params, trajectory, agent);
      score *= scale_i * adv * ratio;
      gradient += score;
    }
  }
  return gradient;
}

namespace {

constexpr std::uint64_t kSparsifySalt = 0x5350415253494659ULL;

// Decoupled-weight-decay adaptive moment estimation; decay is zero here,
// so this is the bias-corrected adaptive step on the ascent direction.
class AdamState {
 public:
  explicit AdamState(const PolicyShape& shape)
      : m_(PolicyGradient::zeros(shape)), v_(PolicyGradient::zeros(shape)) {}

  void step(PolicyParams& params, const PolicyGradient& gradient, double lr) {
    ++t_;
    auto update = [&](Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                      const Eigen::MatrixXd& g) {
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    };
    update(m_.planner, v_.planner, gradient.planner);
    update(m_.worker, v_.worker, gradient.worker);
    const double correction1 = 1.0 - std::pow(kBeta1, t_);
    const double correction2 = 1.0 - std::pow(kBeta2, t_);
    PolicyGradient direction = PolicyGradient::zeros(params.shape());
    auto dir = [&](Eigen::MatrixXd& out, const Eigen::MatrixXd& m,
                   const Eigen::MatrixXd& v) {
      out = (m / correction1).array() /
            ((v / correction2).array().sqrt() + kEps);
    };
    dir(direction.planner, m_.planner, v_.planner);
    dir(direction.worker, m_.worker, v_.worker);
    params.apply_update(direction, lr);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  PolicyGradient m_, v_;
  int t_ = 0;
};

}  // namespace

TrainResult train(const FactWorldSpec& spec, const TrainConfig& config,
                  int jobs,
                  const std::function<void(int, const GroupBatch&)>& on_batch) {
  spec.validate();
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  result.params = PolicyParams::zeros(PolicyShape::for_spec(spec));
  AdamState adam(result.params.shape());

  for (int step = 0; step < config.steps; ++step) {
    GroupBatch batch =
        collect_group(spec, result.params, config.group_size, config.seed,
                      static_cast<std::uint64_t>(step), jobs);
    result.replay_count += compute_rewards(
        batch, config.weights,
        derive_seed(config.seed, kSparsifySalt,
                    static_cast<std::uint64_t>(step)));
    GroupStats stats = group_stats(batch, config.pool_worker_stats);
    fill_advantages(batch, stats, config.delta_stab);

    const double objective = sharp_objective(batch, result.params, config);
    if (!std::isfinite(objective) ||
        std::abs(objective) > config.divergence_bound)
      throw DivergenceError("objective " + std::to_string(objective) +
                            " left the divergence bound at step " +
                            std::to_string(step));

    if (on_batch) on_batch(step, batch);

    StepRecord record;
    record.step = step;
    record.objective = objective;
    int invocations = 0, useful = 0, harmful = 0;
    double success = 0.0, planner_credit_sum = 0.0;
    for (std::size_t i = 0; i < batch.rewards.size(); ++i) {
      success += batch.rewards[i][0].r_broadcast;
      planner_credit_sum += batch.rewards[i][0].r_marginal;
      for (std::size_t m = 1; m < batch.rewards[i].size(); ++m) {
        ++invocations;
        const double credit = batch.rewards[i][m].r_marginal;
        if (credit > 0.0) ++useful;
        if (credit < 0.0) ++harmful;
      }
    }
    record.mean_success = success / batch.rewards.size();
    record.mean_planner_credit = planner_credit_sum / batch.rewards.size();
    if (invocations > 0) {
      record.useful_fraction = static_cast<double>(useful) / invocations;
      record.harmful_fraction = static_cast<double>(harmful) / invocations;
    }
    result.records.push_back(record);

    PolicyGradient gradient = objective_gradient(batch, result.params, config);
    if (config.optimizer == OptimizerKind::adamw)
      adam.step(result.params, gradient, config.learning_rate);
    else
      result.params.apply_update(gradient, config.learning_rate);
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

}  // namespace sharp
