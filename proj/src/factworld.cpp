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

#include "sharp/factworld.hpp"

#include <memory>
#include <stdexcept>

#include "sharp/errors.hpp"

namespace sharp {

std::vector<int> FactSet::to_list() const {
  std::vector<int> out;
  for (int f = 0; f < 64; ++f)
    if (contains(f)) out.push_back(f);
  return out;
}

int Trajectory::action_count() const {
  int n = static_cast<int>(planner_trace.size());
  for (const auto& trace : worker_traces) n += static_cast<int>(trace.size());
  return n;
}

void FactWorldSpec::validate() const {
  if (n_facts < 1 || n_facts > 64)
    throw ConfigError("env.n_facts must be in [1, 64]");
  FactSet all;
  for (int f = 0; f < n_facts; ++f) all = all.with(f);
  if (required_pool.empty())
    throw ConfigError("env.required_facts must be nonempty");
  if (!all.covers(required_pool))
    throw ConfigError("env.required_facts must be within [0, n_facts)");
  if (required_choose < 0 || required_choose > required_pool.count())
    throw ConfigError("env.required_choose must be in [0, |required_facts|]");
  if (templates.empty()) throw ConfigError("env.templates must be nonempty");
  for (std::size_t t = 0; t < templates.size(); ++t) {
    if (!all.covers(templates[t].target))
      throw ConfigError("env.templates[" + std::to_string(t) +
                        "].target must be within [0, n_facts)");
  }
  if (tools.empty()) throw ConfigError("env.tools must be nonempty");
  for (std::size_t k = 0; k < tools.size(); ++k) {
    const ToolSpec& tool = tools[k];
    const std::string field = "env.tools[" + std::to_string(k) + "]";
    if (tool.poison) {
      if (tool.corrupt_prob < 0.0 || tool.corrupt_prob > 1.0)
        throw ConfigError(field + ".corrupt must be in [0, 1]");
      continue;
    }
    if (tool.success_prob.size() != n_facts)
      throw ConfigError(field + ".success must have length n_facts");
    for (int f = 0; f < n_facts; ++f) {
      if (tool.success_prob[f] < 0.0 || tool.success_prob[f] > 1.0)
        throw ConfigError(field + ".success[" + std::to_string(f) +
                          "] must be in [0, 1]");
    }
  }
  if (planner_turn_budget < 1)
    throw ConfigError("env.planner_turn_budget must be >= 1");
  if (worker_step_budget < 1)
    throw ConfigError("env.worker_step_budget must be >= 1");
}

FactWorldSpec make_poison_world() {
  // Calibrated so that 500-step runs separate credit-aware training from
  // broadcast-only training: one useless-fact template and two decoys give
  // the planner junk to learn around, single-call workers make ablation
  // crisp, and the poison tool leaves enough residual harm to measure.
  FactWorldSpec spec;
  spec.n_facts = 3;
  spec.required_pool = FactSet::of({0, 1});
  spec.required_choose = 0;
  spec.templates = {{FactSet::of({0})},
                    {FactSet::of({1})},
                    {FactSet::of({2})},
                    {FactSet{}},
                    {FactSet{}}};

  ToolSpec fetch;
  fetch.name = "fetch";
  fetch.success_prob = Eigen::VectorXd::Constant(3, 0.9);
  ToolSpec flaky;
  flaky.name = "flaky";
  flaky.success_prob = Eigen::VectorXd::Constant(3, 0.35);
  ToolSpec poison;
  poison.name = "poison";
  poison.success_prob = Eigen::VectorXd::Zero(3);
  poison.poison = true;
  poison.corrupt_prob = 0.6;
  spec.tools = {fetch, flaky, poison};

  spec.planner_turn_budget = 4;
  spec.worker_step_budget = 1;
  return spec;
}

QueryInstance sample_query(const FactWorldSpec& spec, std::uint64_t query_id,
                           DrawSource& draws) {
  QueryInstance q;
  q.id = query_id;
  if (spec.required_choose == 0) {
    q.required = spec.required_pool;
    return q;
  }
  // Sequential inclusion: walking the pool, take each fact with probability
  // (k left) / (facts left). Exactly uniform over k-subsets.
  int remaining = spec.required_pool.count();
  int take = spec.required_choose;
  for (int f = 0; f < 64 && take > 0; ++f) {
    if (!spec.required_pool.contains(f)) continue;
    if (draws.u01() * remaining < take) {
      q.required = q.required.with(f);
      --take;
    }
    --remaining;
  }
  return q;
}

Episode::Episode(const FactWorldSpec& spec, QueryInstance query)
    : spec_(&spec) {
  trajectory_.query = query;
}

void Episode::planner_step(const PlannerAction& action, int context_bucket) {
  if (trajectory_.terminal)
    throw std::logic_error("planner_step on a terminal episode");
  if (open_worker_ != 0)
    throw std::logic_error("planner_step while a worker slot is open");
  if (turn_ >= spec_->planner_turn_budget)
    throw std::logic_error("planner turn budget exhausted");

  PlannerActionRecord record;
  record.context_bucket = context_bucket;
  if (action.kind == PlannerAction::Kind::dispatch) {
    if (action.template_id < 0 || action.template_id >= spec_->n_templates())
      throw std::invalid_argument("dispatch of unknown template");
    record.action_id = action.template_id;
    trajectory_.planner_trace.push_back(record);
    trajectory_.worker_traces.emplace_back();
    open_worker_ = static_cast<int>(trajectory_.worker_traces.size());
    worker_steps_ = 0;
  } else {
    record.action_id = spec_->answer_action();
    record.answer = action.answer;
    trajectory_.planner_trace.push_back(record);
    trajectory_.terminal_answer = action.answer;
    trajectory_.answered = true;
    trajectory_.terminal = true;
  }
  ++turn_;
  if (!trajectory_.terminal && open_worker_ == 0 &&
      turn_ >= spec_->planner_turn_budget) {
    force_terminal();
  }
}

const ToolCallRecord& Episode::worker_tool_call(int slot, int tool_id,
                                                DrawSource& draws,
                                                int context_bucket) {
  if (trajectory_.terminal)
    throw std::logic_error("worker_tool_call on a terminal episode");
  if (slot != open_worker_ || slot == 0)
    throw std::logic_error("agent is not the active worker");
  if (worker_steps_ >= spec_->worker_step_budget)
    throw std::logic_error("worker step budget exhausted");

  ToolCallRecord record;
  record.slot = slot;
  record.step = worker_steps_;
  record.context_bucket = context_bucket;
  record.tool_id = tool_id;

  if (tool_id >= 0 && tool_id < spec_->n_tools()) {
    const ToolSpec& tool = spec_->tools[tool_id];
    if (tool.poison) {
      if (draws.u01() < tool.corrupt_prob && !survivors_.empty()) {
        int victim_rank = draws.index_below(survivors_.count());
        int victim = survivors_.to_list()[victim_rank];
        record.corrupted = FactSet{}.with(victim);
        survivors_ = survivors_.without(victim);
      }
    } else {
      record.target = subtask_target(slot);
      for (int f = 0; f < spec_->n_facts; ++f) {
        if (!record.target.contains(f)) continue;
        if (draws.u01() < tool.success_prob[f]) {
          record.granted = record.granted.with(f);
          survivors_ = survivors_.with(f);
        }
      }
    }
    record.success = !record.granted.empty() || !record.corrupted.empty();
    record.validity = record.success ? 1.0 : 0.0;
  }
  // Unknown tool ids: validity 0, no-op observation.

  auto& trace = trajectory_.worker_traces[slot - 1];
  trace.push_back(record);
  ++worker_steps_;
  return trace.back();
}

FactSet Episode::subtask_target(int slot) const {
  // The dispatch that opened slot s is the s-th dispatch in the planner
  // trace; its action id is the template id.
  int seen = 0;
  for (const PlannerActionRecord& record : trajectory_.planner_trace) {
    if (record.action_id >= spec_->n_templates()) continue;  // answer
    ++seen;
    if (seen == slot) return spec_->templates[record.action_id].target;
  }
  throw std::logic_error("no dispatch found for worker slot");
}

int Episode::subtask_template(int slot) const {
  int seen = 0;
  for (const PlannerActionRecord& record : trajectory_.planner_trace) {
    if (record.action_id >= spec_->n_templates()) continue;
    ++seen;
    if (seen == slot) return record.action_id;
  }
  throw std::logic_error("no dispatch found for worker slot");
}

void Episode::close_worker() {
  if (open_worker_ == 0) throw std::logic_error("no worker slot is open");
  open_worker_ = 0;
  worker_steps_ = 0;
  if (turn_ >= spec_->planner_turn_budget) force_terminal();
}

void Episode::force_terminal() {
  trajectory_.terminal_answer =
      survivors_.intersect(trajectory_.query.required);
  trajectory_.answered = false;
  trajectory_.terminal = true;
}

Trajectory Episode::take_trajectory() {
  if (!trajectory_.terminal)
    throw std::logic_error("episode is not terminal yet");
  return std::move(trajectory_);
}

namespace {

int accuracy_over(const Trajectory& trajectory, Coalition coalition) {
  FactSet survivors;
  for (const auto& trace : trajectory.worker_traces) {
    for (const ToolCallRecord& record : trace) {
      if (!coalition.contains(record.slot)) continue;
      survivors = survivors.unite(record.granted);
      survivors = survivors.minus(record.corrupted);
    }
  }
  const FactSet required = trajectory.query.required;
  const bool covered = survivors.covers(required);
  const bool answer_ok =
      trajectory.terminal_answer == survivors.intersect(required);
  return (covered && answer_ok) ? 1 : 0;
}

}  // namespace

int terminal_accuracy(const Trajectory& trajectory) {
  if (!trajectory.terminal)
    throw std::logic_error("terminal_accuracy on a non-terminal trajectory");
  FactSet survivors;
  for (const auto& trace : trajectory.worker_traces) {
    for (const ToolCallRecord& record : trace) {
      survivors = survivors.unite(record.granted);
      survivors = survivors.minus(record.corrupted);
    }
  }
  const FactSet required = trajectory.query.required;
  return (survivors.covers(required) &&
          trajectory.terminal_answer == survivors.intersect(required))
             ? 1
             : 0;
}

int counterfactual_replay(const Trajectory& trajectory, Coalition coalition) {
  if (!trajectory.terminal)
    throw std::logic_error("replay on a non-terminal trajectory");
  const int n = 1 + trajectory.worker_count();
  if (!coalition.subset_of(Coalition::full(n)))
    throw std::invalid_argument("coalition contains unknown agent slots");
  if (!coalition.contains(0)) return 0;  // no planner, no subtasks
  return accuracy_over(trajectory, coalition);
}

CooperativeGame trajectory_game(const Trajectory& trajectory) {
  const int n = 1 + trajectory.worker_count();
  auto shared = std::make_shared<Trajectory>(trajectory);
  return CooperativeGame::from_function(
      n,
      [shared](Coalition coalition) {
        return static_cast<double>(counterfactual_replay(*shared, coalition));
      },
      /*memoize=*/true);
}

}  // namespace sharp
