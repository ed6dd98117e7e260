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

#include <cmath>
#include <doctest.h>
#include <sstream>

#include "sharp/errors.hpp"
#include "sharp/optim.hpp"
#include "sharp/trajectory_log.hpp"

using namespace sharp;

namespace {

// Minimal batch whose rewards are injected directly; the planner is the
// only agent unless worker rows are added.
GroupBatch injected_batch(const std::vector<double>& planner_rewards) {
  GroupBatch batch;
  batch.group_size = static_cast<int>(planner_rewards.size());
  for (double r : planner_rewards) {
    Trajectory t;
    PlannerActionRecord record;
    record.context_bucket = 0;
    record.action_id = 0;
    t.planner_trace.push_back(record);
    t.terminal = true;
    batch.trajectories.push_back(std::move(t));
    RewardBundle bundle;
    bundle.r_total = r;
    batch.rewards.push_back({bundle});
  }
  return batch;
}

FactWorldSpec lab_world() { return make_poison_world(); }

GroupBatch collected_batch(std::uint64_t seed, std::uint64_t query_id,
                           int G = 4) {
  FactWorldSpec spec = lab_world();
  PolicyParams uniform = PolicyParams::zeros(PolicyShape::for_spec(spec));
  GroupBatch batch = collect_group(spec, uniform, G, seed, query_id);
  RewardWeights weights;
  compute_rewards(batch, weights, derive_seed(seed, query_id, 99));
  fill_advantages(batch, group_stats(batch), 1e-6);
  return batch;
}

double fd_objective_coord(const GroupBatch& batch, const PolicyParams& params,
                          const TrainConfig& config, Role role, int bucket,
                          int action, double h = 1e-5) {
  PolicyParams hi = params, lo = params;
  hi.set_logit(role, bucket, action,
               params.logit(role, bucket, action) + h);
  lo.set_logit(role, bucket, action,
               params.logit(role, bucket, action) - h);
  return (sharp_objective(batch, hi, config) -
          sharp_objective(batch, lo, config)) /
         (2 * h);
}

}  // namespace

TEST_CASE("group_stats") {
  SUBCASE("binary rewards") {
    GroupBatch batch = injected_batch({1.0, 0.0, 1.0, 0.0});
    GroupStats stats = group_stats(batch);
    CHECK(stats.by_slot[0].mu == 0.5);
    CHECK(stats.by_slot[0].sigma == 0.5);
    CHECK(stats.by_slot[0].n_samples == 4);
  }
  SUBCASE("constant rewards have zero deviation") {
    GroupBatch batch = injected_batch({0.7, 0.7, 0.7});
    GroupStats stats = group_stats(batch);
    CHECK(stats.by_slot[0].mu == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(stats.by_slot[0].sigma == 0.0);
  }
  SUBCASE("identities only count trajectories they appear in") {
    GroupBatch batch = injected_batch({1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0});
    // Give worker slot 1 to all, slot 2 to three of them.
    for (std::size_t i = 0; i < 8; ++i) {
      batch.trajectories[i].worker_traces.emplace_back();
      RewardBundle w1;
      w1.r_total = 0.25;
      batch.rewards[i].push_back(w1);
      if (i < 3) {
        batch.trajectories[i].worker_traces.emplace_back();
        RewardBundle w2;
        w2.r_total = static_cast<double>(i);
        batch.rewards[i].push_back(w2);
      }
    }
    GroupStats stats = group_stats(batch);
    CHECK(stats.by_slot[2].n_samples == 3);
    CHECK(stats.by_slot[2].mu == doctest::Approx(1.0));  // mean of 0,1,2
    GroupStats pooled = group_stats(batch, true);
    CHECK(pooled.pooled_worker_entry.n_samples == 11);
  }
}

TEST_CASE("advantage") {
  SUBCASE("binary pair with the tuned delta") {
    StatsEntry stats{0.5, 0.5, 2};
    const double expected = 0.5 / (0.5 + 1e-6);
    CHECK(advantage(1.0, stats, 1e-6) ==
          doctest::Approx(expected).epsilon(1e-15));
    CHECK(advantage(0.0, stats, 1e-6) ==
          doctest::Approx(-expected).epsilon(1e-15));
  }
  SUBCASE("constant group gives zero advantages") {
    StatsEntry stats{0.7, 0.0, 3};
    CHECK(advantage(0.7, stats, 1e-6) == 0.0);
  }
  SUBCASE("single-sample identities are exactly zero") {
    StatsEntry stats{0.3, 0.0, 1};
    CHECK(advantage(0.3, stats, 1e-6) == 0.0);
  }
}

TEST_CASE("policy_ratio") {
  FactWorldSpec spec = lab_world();
  PolicyShape shape = PolicyShape::for_spec(spec);
  PolicyParams uniform = PolicyParams::zeros(shape);
  GroupBatch batch = collect_group(spec, uniform, 4, 314, 0);
  const Trajectory& t = batch.trajectories[0];

  SUBCASE("identical policies give exactly 1") {
    CHECK(policy_ratio(uniform, uniform, t, AgentId::planner()) == 1.0);
    for (int slot = 1; slot <= t.worker_count(); ++slot)
      CHECK(policy_ratio(uniform, uniform, t, AgentId::worker(slot)) == 1.0);
  }
  SUBCASE("doubling each of two action probabilities gives 4") {
    // Two decisions in distinct 4-way rows; raise the taken actions from
    // 1/4 to 1/2 (logit ln 3 against three zeros).
    PolicyShape two;
    two.planner_buckets = 2;
    two.planner_actions = 4;
    two.worker_buckets = 1;
    two.worker_actions = 2;
    PolicyParams old_params = PolicyParams::zeros(two);
    PolicyParams new_params = old_params;
    new_params.set_logit(Role::planner, 0, 1, std::log(3.0));
    new_params.set_logit(Role::planner, 1, 2, std::log(3.0));
    Trajectory hand;
    PlannerActionRecord r0, r1;
    r0.context_bucket = 0;
    r0.action_id = 1;
    r1.context_bucket = 1;
    r1.action_id = 2;
    hand.planner_trace = {r0, r1};
    hand.terminal = true;
    CHECK(policy_ratio(new_params, old_params, hand, AgentId::planner()) ==
          doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("matches the product of per-step probability ratios") {
    Rng rng(4242);
    PolicyParams perturbed = uniform;
    for (int b = 0; b < shape.planner_buckets; ++b)
      for (int a = 0; a < shape.planner_actions; ++a)
        perturbed.set_logit(Role::planner, b, a, 0.4 * rng.u01() - 0.2);
    for (int b = 0; b < shape.worker_buckets; ++b)
      for (int a = 0; a < shape.worker_actions; ++a)
        perturbed.set_logit(Role::worker, b, a, 0.4 * rng.u01() - 0.2);

    for (const Trajectory& trajectory : batch.trajectories) {
      for (int slot = 0; slot <= trajectory.worker_count(); ++slot) {
        AgentId agent =
            slot == 0 ? AgentId::planner() : AgentId::worker(slot);
        double product = 1.0;
        if (slot == 0) {
          for (const auto& rec : trajectory.planner_trace) {
            RoleContext ctx{Role::planner, rec.context_bucket};
            product *= action_distribution(perturbed, ctx)[rec.action_id] /
                       action_distribution(uniform, ctx)[rec.action_id];
          }
        } else {
          for (const auto& rec : trajectory.worker_traces[slot - 1]) {
            RoleContext ctx{Role::worker, rec.context_bucket};
            product *= action_distribution(perturbed, ctx)[rec.tool_id] /
                       action_distribution(uniform, ctx)[rec.tool_id];
          }
        }
        CHECK(policy_ratio(perturbed, uniform, trajectory, agent) ==
              doctest::Approx(product).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("clipped_term") {
  CHECK(clipped_term(1.5, 1.0, 0.2) == doctest::Approx(1.2).epsilon(1e-15));
  // min picks the lower branch: the clip bound times the advantage.
  CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8).epsilon(1e-15));
  for (double adv : {-2.0, -0.3, 0.0, 0.7, 3.1})
    CHECK(clipped_term(1.0, adv, 0.2) == adv);

  SUBCASE("pessimism: never exceeds ratio * advantage") {
    Rng rng(88);
    for (int k = 0; k < 200; ++k) {
      double ratio = 2.5 * rng.u01();
      double adv = 4.0 * rng.u01() - 2.0;
      double term = clipped_term(ratio, adv, 0.2);
      CHECK(term <= ratio * adv + 1e-15);
      if (ratio >= 0.8 && ratio <= 1.2) CHECK(term == ratio * adv);
    }
  }
}

TEST_CASE("sharp_objective") {
  TrainConfig config;

  SUBCASE("at the snapshot it averages the advantages") {
    GroupBatch batch = collected_batch(1001, 0);
    double expected = 0.0;
    for (const auto& advantages : batch.advantages) {
      double inner = 0.0;
      for (double adv : advantages) inner += adv;
      expected += inner / advantages.size();
    }
    expected /= static_cast<double>(batch.advantages.size());
    CHECK(sharp_objective(batch, batch.old_params, config) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("all-zero advantages give zero") {
    GroupBatch batch = collected_batch(1002, 0);
    for (auto& advantages : batch.advantages)
      for (double& adv : advantages) adv = 0.0;
    CHECK(sharp_objective(batch, batch.old_params, config) == 0.0);
  }
  SUBCASE("hand-evaluated two-trajectory batch") {
    // G=2, planner plus one worker each; advantages and ratios chosen so
    // both branches of the clip are exercised.
    PolicyShape shape;
    shape.planner_buckets = 1;
    shape.planner_actions = 2;
    shape.worker_buckets = 1;
    shape.worker_actions = 2;
    PolicyParams old_params = PolicyParams::zeros(shape);
    PolicyParams new_params = old_params;
    // Planner row becomes [3/4, 1/4] against the old [1/2, 1/2].
    new_params.set_logit(Role::planner, 0, 0, std::log(3.0));

    GroupBatch batch;
    batch.group_size = 2;
    batch.old_params = old_params;
    for (int i = 0; i < 2; ++i) {
      Trajectory t;
      PlannerActionRecord pa;
      pa.context_bucket = 0;
      pa.action_id = i == 0 ? 0 : 1;
      t.planner_trace.push_back(pa);
      ToolCallRecord w;
      w.slot = 1;
      w.step = 0;
      w.context_bucket = 0;
      w.tool_id = 0;
      t.worker_traces.push_back({w});
      t.terminal = true;
      batch.trajectories.push_back(std::move(t));
    }
    batch.advantages = {{1.0, -1.0}, {0.5, 0.25}};

    // Trajectory 0: planner ratio 1.5, clipped to 1.2 with adv 1 -> 1.2;
    // worker ratio 1 with adv -1 -> -1.
    // Trajectory 1: planner ratio 0.5, min(0.5*0.5, 0.8*0.5) -> 0.25;
    // worker ratio 1 with adv 0.25 -> 0.25.
    const double expected = 0.5 * ((1.2 - 1.0) / 2.0 + (0.25 + 0.25) / 2.0);
    CHECK(sharp_objective(batch, new_params, config) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("objective_gradient") {
  TrainConfig config;

  SUBCASE("zero advantages give a zero gradient") {
    GroupBatch batch = collected_batch(1003, 0);
    for (auto& advantages : batch.advantages)
      for (double& adv : advantages) adv = 0.0;
    PolicyGradient g = objective_gradient(batch, batch.old_params, config);
    CHECK(g.max_abs() == 0.0);
  }
  SUBCASE("a clipped positive-advantage term contributes nothing") {
    PolicyShape shape;
    shape.planner_buckets = 1;
    shape.planner_actions = 2;
    shape.worker_buckets = 1;
    shape.worker_actions = 2;
    PolicyParams old_params = PolicyParams::zeros(shape);
    PolicyParams new_params = old_params;
    new_params.set_logit(Role::planner, 0, 0, std::log(3.0));  // ratio 2 > 1.2

    GroupBatch batch;
    batch.group_size = 2;
    batch.old_params = old_params;
    for (int i = 0; i < 2; ++i) {
      Trajectory t;
      PlannerActionRecord pa;
      pa.context_bucket = 0;
      pa.action_id = 0;
      t.planner_trace.push_back(pa);
      t.terminal = true;
      batch.trajectories.push_back(std::move(t));
    }
    batch.advantages = {{1.0}, {0.0}};
    PolicyGradient g = objective_gradient(batch, new_params, config);
    CHECK(g.max_abs() == 0.0);
  }
  SUBCASE("matches finite differences on random batches") {
    for (int k = 0; k < 20; ++k) {
      GroupBatch batch = collected_batch(2000 + k, k);
      // Evaluate away from the snapshot so ratios are non-trivial.
      Rng rng(3000 + k);
      PolicyParams params = batch.old_params;
      PolicyShape shape = params.shape();
      for (int b = 0; b < shape.planner_buckets; ++b)
        for (int a = 0; a < shape.planner_actions; ++a)
          params.set_logit(Role::planner, b, a, 0.2 * rng.u01() - 0.1);
      for (int b = 0; b < shape.worker_buckets; ++b)
        for (int a = 0; a < shape.worker_actions; ++a)
          params.set_logit(Role::worker, b, a, 0.2 * rng.u01() - 0.1);

      // Skip evaluation points that sit on a clip kink.
      bool near_kink = false;
      for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
        for (std::size_t m = 0; m < batch.advantages[i].size(); ++m) {
          AgentId agent = m == 0 ? AgentId::planner()
                                 : AgentId::worker(static_cast<int>(m));
          double ratio = policy_ratio(params, batch.old_params,
                                      batch.trajectories[i], agent);
          if (std::abs(ratio - 0.8) < 1e-3 || std::abs(ratio - 1.2) < 1e-3)
            near_kink = true;
        }
      }
      if (near_kink) continue;

      PolicyGradient analytic = objective_gradient(batch, params, config);
      double num = 0.0, den = 0.0;
      for (Role role : {Role::planner, Role::worker}) {
        const Eigen::MatrixXd& mat =
            role == Role::planner ? analytic.planner : analytic.worker;
        for (Eigen::Index b = 0; b < mat.rows(); ++b) {
          for (Eigen::Index a = 0; a < mat.cols(); ++a) {
            double fd = fd_objective_coord(batch, params, config, role,
                                           static_cast<int>(b),
                                           static_cast<int>(a));
            num += (mat(b, a) - fd) * (mat(b, a) - fd);
            den += fd * fd;
          }
        }
      }
      CHECK(std::sqrt(num) / std::max(1e-12, std::sqrt(den)) < 1e-4);
    }
  }
}

TEST_CASE("advantage pipeline invariants") {
  SUBCASE("per-identity normalization") {
    for (int k = 0; k < 10; ++k) {
      GroupBatch batch = collected_batch(4000 + k, k, 8);
      GroupStats stats = group_stats(batch);
      const double delta = 1e-6;
      for (std::size_t slot = 0; slot < stats.by_slot.size(); ++slot) {
        const StatsEntry& entry = stats.by_slot[slot];
        if (entry.n_samples < 2 || entry.sigma == 0.0) continue;
        double sum = 0.0, sum_sq = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < batch.advantages.size(); ++i) {
          if (slot >= batch.advantages[i].size()) continue;
          sum += batch.advantages[i][slot];
          sum_sq += batch.advantages[i][slot] * batch.advantages[i][slot];
          ++n;
        }
        CHECK(n == entry.n_samples);
        const double mean = sum / n;
        const double sd = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
        CHECK(std::abs(mean) <= 1e-9);
        CHECK(std::abs(sd - entry.sigma / (entry.sigma + delta)) <= 1e-9);
      }
    }
  }
  SUBCASE("shifting one identity's rewards leaves its advantages unchanged") {
    GroupBatch batch = collected_batch(5001, 3, 8);
    GroupBatch shifted = batch;
    const double c = 2.75;
    for (auto& row : shifted.rewards) row[0].r_total += c;  // planner shift
    fill_advantages(batch, group_stats(batch), 1e-6);
    fill_advantages(shifted, group_stats(shifted), 1e-6);
    for (std::size_t i = 0; i < batch.advantages.size(); ++i)
      CHECK(std::abs(batch.advantages[i][0] - shifted.advantages[i][0]) <=
            1e-9);
  }
}

TEST_CASE("train loop") {
  FactWorldSpec spec = lab_world();

  SUBCASE("zero steps leave the policy untouched") {
    TrainConfig config;
    config.steps = 0;
    TrainResult result = train(spec, config);
    CHECK(result.records.empty());
    CHECK(result.params.logits(Role::planner).cwiseAbs().maxCoeff() == 0.0);
    CHECK(result.replay_count == 0);
  }
  SUBCASE("training is bit-exact under a fixed config") {
    TrainConfig config;
    config.steps = 12;
    config.learning_rate = 0.25;
    config.seed = 97;
    TrainResult a = train(spec, config, 1);
    TrainResult b = train(spec, config, 4);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].objective == b.records[i].objective);
      CHECK(a.records[i].mean_success == b.records[i].mean_success);
    }
    std::ostringstream ca, cb;
    save_policy(a.params, ca);
    save_policy(b.params, cb);
    CHECK(ca.str() == cb.str());
    CHECK(a.replay_count == b.replay_count);
  }
  SUBCASE("the divergence guard trips") {
    TrainConfig config;
    config.steps = 5;
    config.divergence_bound = 1e-12;
    CHECK_THROWS_AS(train(spec, config), DivergenceError);
  }
  SUBCASE("adaptive optimizer runs and stays deterministic") {
    TrainConfig config;
    config.steps = 6;
    config.optimizer = OptimizerKind::adamw;
    config.learning_rate = 0.05;
    TrainResult a = train(spec, config);
    TrainResult b = train(spec, config);
    std::ostringstream ca, cb;
    save_policy(a.params, ca);
    save_policy(b.params, cb);
    CHECK(ca.str() == cb.str());
  }
}

TEST_CASE("single-agent batches reduce to plain group-relative updates") {
  // Planner-only trajectories with injected binary rewards; with beta and
  // gamma zero the per-term update must equal an independent single-agent
  // computation, bit for bit.
  PolicyShape shape;
  shape.planner_buckets = 1;
  shape.planner_actions = 3;
  shape.worker_buckets = 1;
  shape.worker_actions = 2;

  for (int rep = 0; rep < 20; ++rep) {
    Rng rng(6000 + rep);
    PolicyParams params = PolicyParams::zeros(shape);

    GroupBatch batch;
    batch.group_size = 8;
    batch.old_params = params;
    std::vector<int> actions;
    std::vector<double> rewards;
    for (int i = 0; i < 8; ++i) {
      Trajectory t;
      PlannerActionRecord record;
      record.context_bucket = 0;
      record.action_id = rng.index_below(3);
      actions.push_back(record.action_id);
      t.planner_trace.push_back(record);
      t.terminal = true;
      batch.trajectories.push_back(std::move(t));
      RewardBundle bundle;
      bundle.r_broadcast = rng.u01() < 0.5 ? 1.0 : 0.0;
      bundle.r_total = 1.0 * bundle.r_broadcast;  // alpha=1, beta=gamma=0
      rewards.push_back(bundle.r_total);
      batch.rewards.push_back({bundle});
    }
    TrainConfig config;
    config.weights.alpha = 1.0;
    config.weights.beta = 0.0;
    config.weights.gamma = 0.0;
    fill_advantages(batch, group_stats(batch), config.delta_stab);

    PolicyGradient g = objective_gradient(batch, params, config);

    // Independent single-agent reference.
    double mu = 0.0;
    for (double r : rewards) mu += r;
    mu /= 8.0;
    double var = 0.0;
    for (double r : rewards) var += (r - mu) * (r - mu);
    double sigma = std::sqrt(var / 8.0);
    Eigen::VectorXd probs(3);
    probs.setConstant(1.0 / 3);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(1, 3);
    for (int i = 0; i < 8; ++i) {
      const double adv = (rewards[i] - mu) / (sigma + config.delta_stab);
      for (int a = 0; a < 3; ++a) {
        const double indicator = a == actions[i] ? 1.0 : 0.0;
        expected(0, a) += (indicator - probs[a]) * adv / 8.0;
      }
    }
    CHECK(g.planner.rows() == 1);
    for (int a = 0; a < 3; ++a)
      CHECK(g.planner(0, a) == doctest::Approx(expected(0, a)).epsilon(1e-13));
    CHECK(g.worker.cwiseAbs().maxCoeff() == 0.0);
  }
}
