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
#include <fstream>
#include <sstream>

#include "sharp/analytics.hpp"
#include "sharp/cli.hpp"
#include "sharp/rollout.hpp"

using namespace sharp;

namespace {

FactWorldSpec test_world() {
  FactWorldSpec spec;
  spec.n_facts = 2;
  spec.required_pool = FactSet::of({0, 1});
  spec.templates = {{FactSet::of({0})}, {FactSet::of({1})}, {FactSet{}}};
  ToolSpec sure;
  sure.name = "sure";
  sure.success_prob = Eigen::VectorXd::Ones(2);
  ToolSpec never;
  never.name = "never";
  never.success_prob = Eigen::VectorXd::Zero(2);
  ToolSpec poison;
  poison.name = "poison";
  poison.success_prob = Eigen::VectorXd::Zero(2);
  poison.poison = true;
  poison.corrupt_prob = 1.0;
  spec.tools = {sure, never, poison};
  spec.planner_turn_budget = 4;
  spec.worker_step_budget = 1;
  return spec;
}

Trajectory scripted(const FactWorldSpec& spec,
                    const std::vector<std::pair<int, int>>& dispatches,
                    FactSet answer) {
  Rng rng(11);
  Episode ep(spec, sample_query(spec, 0, rng));
  for (auto [tpl, tool] : dispatches) {
    ep.planner_step(PlannerAction::dispatch(tpl));
    ep.worker_tool_call(ep.open_worker(), tool, rng);
    ep.close_worker();
  }
  ep.planner_step(PlannerAction::answer_with(answer));
  return ep.take_trajectory();
}

}  // namespace

TEST_CASE("coordination_report") {
  FactWorldSpec spec = test_world();

  SUBCASE("all-pivotal workers are all useful") {
    std::vector<Trajectory> batch = {
        scripted(spec, {{0, 0}, {1, 0}}, FactSet::of({0, 1})),
        scripted(spec, {{0, 0}, {1, 0}}, FactSet::of({0, 1}))};
    CoordinationReport report =
        coordination_report(batch, CreditEstimator::exact, "test");
    CHECK(report.useful_fraction == 1.0);
    CHECK(report.harmful_fraction == 0.0);
    CHECK(report.n_invocations == 4);
  }
  SUBCASE("failures with no pivotal flips are all neutral") {
    // Workers use the noop tool; nothing is gathered, masking changes
    // nothing.
    std::vector<Trajectory> batch = {
        scripted(spec, {{0, 1}, {1, 1}}, FactSet::of({0, 1}))};
    CoordinationReport report =
        coordination_report(batch, CreditEstimator::exact, "test");
    CHECK(report.neutral_fraction == 1.0);
    CHECK(report.planner_score == 0.0);
  }
  SUBCASE("classification partitions the invocations") {
    std::vector<Trajectory> batch = {
        scripted(spec, {{0, 0}, {1, 0}, {2, 2}}, FactSet::of({0, 1})),
        scripted(spec, {{0, 0}, {1, 1}}, FactSet::of({0, 1}))};
    for (CreditEstimator est :
         {CreditEstimator::exact, CreditEstimator::single_ablation}) {
      CoordinationReport report = coordination_report(batch, est, "test");
      CHECK(std::abs(report.useful_fraction + report.harmful_fraction +
                     report.neutral_fraction - 1.0) < 1e-12);
    }
  }
  SUBCASE("matches an independent reclassification pass") {
    FactWorldSpec lab = make_poison_world();
    PolicyParams uniform = PolicyParams::zeros(PolicyShape::for_spec(lab));
    EvalResult eval = evaluate_policy(lab, uniform, 31, 100);
    CoordinationReport report = coordination_report(
        eval.trajectories, CreditEstimator::single_ablation, "test");

    std::int64_t useful = 0, harmful = 0, neutral = 0;
    double planner_sum = 0.0;
    for (const Trajectory& t : eval.trajectories) {
      const double acc = terminal_accuracy(t);
      const int agents = 1 + t.worker_count();
      planner_sum +=
          acc - counterfactual_replay(t, Coalition::full(agents).without(0));
      for (int slot = 1; slot <= t.worker_count(); ++slot) {
        const double credit =
            acc -
            counterfactual_replay(t, Coalition::full(agents).without(slot));
        if (credit > 0)
          ++useful;
        else if (credit < 0)
          ++harmful;
        else
          ++neutral;
      }
    }
    const double total = static_cast<double>(useful + harmful + neutral);
    CHECK(report.n_invocations == useful + harmful + neutral);
    CHECK(report.useful_fraction == doctest::Approx(useful / total));
    CHECK(report.harmful_fraction == doctest::Approx(harmful / total));
    CHECK(report.planner_score ==
          doctest::Approx(planner_sum / eval.trajectories.size()));
  }
  SUBCASE("estimators agree in sign for single-worker trajectories") {
    std::vector<Trajectory> batch = {
        scripted(spec, {{0, 0}}, FactSet::of({0}))};
    batch[0].query.required = FactSet::of({0});
    CoordinationReport exact =
        coordination_report(batch, CreditEstimator::exact, "test");
    CoordinationReport ablation =
        coordination_report(batch, CreditEstimator::single_ablation, "test");
    CHECK(exact.useful_fraction == ablation.useful_fraction);
    CHECK(exact.harmful_fraction == ablation.harmful_fraction);
  }
}

TEST_CASE("compare_runs") {
  CoordinationReport a;
  a.planner_score = 0.4542;
  a.useful_fraction = 0.1103;
  a.harmful_fraction = 0.0548;

  SUBCASE("identical reports have zero deltas") {
    CoordinationDelta delta = compare_runs(a, a);
    CHECK(delta.planner_score == 0.0);
    CHECK(delta.useful_fraction == 0.0);
    CHECK(delta.harmful_fraction == 0.0);
  }
  SUBCASE("reference fixture deltas") {
    CoordinationReport b;
    b.planner_score = 0.5084;
    b.useful_fraction = 0.1296;
    b.harmful_fraction = 0.0440;
    CoordinationDelta delta = compare_runs(a, b);
    CHECK(delta.planner_score == doctest::Approx(0.0542).epsilon(1e-12));
    CHECK(delta.useful_fraction == doctest::Approx(0.0193).epsilon(1e-12));
    CHECK(delta.harmful_fraction == doctest::Approx(-0.0108).epsilon(1e-12));
  }
}

TEST_CASE("reference coordination fixture") {
  std::ifstream in(std::string(SHARP_DATA_DIR) + "/reference_coordination.csv");
  REQUIRE(in.good());
  std::string header, baseline, matpo, sharp_row;
  std::getline(in, header);
  std::getline(in, baseline);
  std::getline(in, matpo);
  std::getline(in, sharp_row);
  CHECK(header ==
        "system,planner_score,useful_fraction,harmful_fraction");
  CHECK(baseline == "baseline,0.4542,0.1103,0.0548");
  CHECK(matpo == "matpo,0.4804,,");
  CHECK(sharp_row == "sharp,0.5084,0.1296,0.0440");

  SUBCASE("report formatting renders the fixture rows faithfully") {
    CoordinationReport report;
    report.source = "fixture:baseline";
    report.estimator = CreditEstimator::exact;
    report.n_trajectories = 1;
    report.n_invocations = 10000;
    report.planner_score = 0.4542;
    report.useful_fraction = 0.1103;
    report.harmful_fraction = 0.0548;
    report.neutral_fraction = 1.0 - 0.1103 - 0.0548;
    std::string csv = cli::coordination_report_csv(report);
    CHECK(csv.find("0.4542") != std::string::npos);
    CHECK(csv.find("0.1103") != std::string::npos);
    CHECK(csv.find("0.0548") != std::string::npos);
  }
}

TEST_CASE("sweep_p") {
  FactWorldSpec spec = make_poison_world();
  TrainConfig config;
  config.steps = 8;
  config.learning_rate = 0.3;
  config.seed = 12;

  SUBCASE("p = 0 performs no replays; p = 1 replays every invocation") {
    TrainConfig dense = config;
    dense.weights.sparsify_p = 1.0;
    std::uint64_t invocations = 0;
    TrainResult trained = train(
        spec, dense, 1, [&invocations](int, const GroupBatch& batch) {
          for (const Trajectory& t : batch.trajectories)
            invocations += t.worker_count();
        });
    CHECK(trained.replay_count == invocations);

    TrainConfig off = config;
    off.weights.sparsify_p = 0.0;
    CHECK(train(spec, off).replay_count == 0);
  }
  SUBCASE("replay counts grow with p over the standard sweep") {
    const double ps[] = {0.0, 0.5, 1.0};
    std::vector<SweepRow> rows = sweep_p(spec, config, ps, 40);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].train_replay_count == 0);
    CHECK(rows[0].train_replay_count < rows[1].train_replay_count);
    CHECK(rows[1].train_replay_count < rows[2].train_replay_count);
  }
}
