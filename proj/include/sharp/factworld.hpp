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

#ifndef SHARP_FACTWORLD_HPP_
#define SHARP_FACTWORLD_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "sharp/game.hpp"
#include "sharp/rng.hpp"

namespace sharp {

// A set of facts, encoded as a 64-bit mask.
struct FactSet {
  std::uint64_t bits = 0;

  static FactSet of(std::initializer_list<int> facts) {
    FactSet s;
    for (int f : facts) s.bits |= (std::uint64_t{1} << f);
    return s;
  }
  bool contains(int fact) const { return (bits >> fact) & 1u; }
  FactSet with(int fact) const { return {bits | (std::uint64_t{1} << fact)}; }
  FactSet without(int fact) const {
    return {bits & ~(std::uint64_t{1} << fact)};
  }
  bool covers(FactSet other) const { return (other.bits & ~bits) == 0; }
  int count() const { return __builtin_popcountll(bits); }
  bool empty() const { return bits == 0; }
  FactSet unite(FactSet other) const { return {bits | other.bits}; }
  FactSet intersect(FactSet other) const { return {bits & other.bits}; }
  FactSet minus(FactSet other) const { return {bits & ~other.bits}; }
  std::vector<int> to_list() const;

  friend bool operator==(FactSet a, FactSet b) { return a.bits == b.bits; }
};

// One dispatchable subtask: gather the target facts. Empty target = decoy.
struct SubtaskTemplate {
  FactSet target;
};

// A tool available to workers. Gather tools grant each targeted fact
// independently with success_prob[fact]; the poison tool instead corrupts
// (removes) one surviving gathered fact with probability corrupt_prob.
struct ToolSpec {
  std::string name;
  Eigen::VectorXd success_prob;  // length n_facts; ignored for poison tools
  bool poison = false;
  double corrupt_prob = 0.0;
};

struct FactWorldSpec {
  int n_facts = 0;
  FactSet required_pool;   // base required-fact set
  int required_choose = 0; // 0: required = pool; k>0: uniform k-subset of pool
  std::vector<SubtaskTemplate> templates;
  std::vector<ToolSpec> tools;
  int planner_turn_budget = 1;
  int worker_step_budget = 1;

  int n_templates() const { return static_cast<int>(templates.size()); }
  int n_tools() const { return static_cast<int>(tools.size()); }
  // Planner menu: one dispatch per template plus the answer action.
  int planner_actions() const { return n_templates() + 1; }
  int answer_action() const { return n_templates(); }

  // Throws ConfigError naming the offending field on invariant violations.
  void validate() const;
};

struct QueryInstance {
  std::uint64_t id = 0;
  FactSet required;
  // The visible subtask menu is the world's template list, shared by all
  // queries of a run.
};

enum class Role { planner, worker };

// planner is always slot 0; worker slots are 1..T, dense in dispatch order.
struct AgentId {
  Role role = Role::planner;
  int slot = 0;

  static AgentId planner() { return {Role::planner, 0}; }
  static AgentId worker(int slot) { return {Role::worker, slot}; }
  friend bool operator==(AgentId a, AgentId b) {
    return a.role == b.role && a.slot == b.slot;
  }
};

struct PlannerAction {
  enum class Kind { dispatch, answer };
  Kind kind = Kind::answer;
  int template_id = -1;
  FactSet answer;

  static PlannerAction dispatch(int template_id) {
    PlannerAction a;
    a.kind = Kind::dispatch;
    a.template_id = template_id;
    return a;
  }
  static PlannerAction answer_with(FactSet facts) {
    PlannerAction a;
    a.kind = Kind::answer;
    a.answer = facts;
    return a;
  }
};

struct PlannerActionRecord {
  int context_bucket = 0;
  int action_id = 0;  // template id for dispatches, spec.answer_action() else
  FactSet answer;     // meaningful only for the answer action
};

// Exactly one tool invocation per worker step.
struct ToolCallRecord {
  int slot = 0;  // worker slot >= 1
  int step = 0;  // 0-based step within the subtask
  int context_bucket = 0;
  int tool_id = 0;
  FactSet target;     // argument fact set (the subtask target; empty for poison)
  bool success = false;
  FactSet granted;
  FactSet corrupted;
  double validity = 0.0;  // 1 iff well-formed and the tool reported success
};

// Full record of one episode: the planner trace, per-slot worker traces,
// the terminal answer, and the raw uniform draws consumed (rng_trace), in
// order. Replaying rng_trace through the same policy and spec reproduces
// the trajectory bit-exactly.
struct Trajectory {
  QueryInstance query;
  std::vector<PlannerActionRecord> planner_trace;
  std::vector<std::vector<ToolCallRecord>> worker_traces;
  FactSet terminal_answer;
  bool answered = false;  // true when terminated by an answer action
  bool terminal = false;
  std::vector<double> rng_trace;
  std::uint64_t stream_key = 0;

  int worker_count() const { return static_cast<int>(worker_traces.size()); }
  // Planner decisions plus tool calls; the evaluation cost proxy.
  int action_count() const;
};

// Samples the required-fact set for a query. Uses sequential inclusion
// sampling, which is exactly uniform over k-subsets of the pool.
QueryInstance sample_query(const FactWorldSpec& spec, std::uint64_t query_id,
                           DrawSource& draws);

// Three-fact world (two required), fact templates plus useless and decoy
// templates, a reliable and a flaky gather tool, and a poison tool that
// corrupts gathered facts. The default environment: small enough for
// tabular training, rich enough to make negative marginal credit
// reachable.
FactWorldSpec make_poison_world();

// Mutable episode state driving one rollout. The FactWorldSpec must outlive
// the episode.
class Episode {
 public:
  Episode(const FactWorldSpec& spec, QueryInstance query);

  bool terminal() const { return trajectory_.terminal; }
  int turn() const { return turn_; }
  FactSet survivors() const { return survivors_; }
  int open_worker() const { return open_worker_; }  // 0 when none open
  const QueryInstance& query() const { return trajectory_.query; }

  // Applies one planner decision. Dispatch opens a new worker slot whose
  // subtask is the template's target; answer terminates the episode.
  // Throws std::logic_error when called on a terminal episode or while a
  // worker slot is still open.
  void planner_step(const PlannerAction& action, int context_bucket = 0);

  // One tool invocation by the active worker. A tool id outside the menu is
  // recorded as a malformed call (validity 0, no-op observation). Throws
  // std::logic_error when the slot is not the active worker or its step
  // budget is exhausted.
  const ToolCallRecord& worker_tool_call(int slot, int tool_id,
                                         DrawSource& draws,
                                         int context_bucket = 0);

  // Ends the active subtask; forces a terminal once the planner's turn
  // budget is spent (the forced answer is the surviving gathered facts
  // restricted to the query's required set).
  void close_worker();

  Trajectory take_trajectory();

  // Template backing a worker slot's subtask (slot must have been opened).
  FactSet subtask_target(int slot) const;
  int subtask_template(int slot) const;

 private:
  void force_terminal();

  const FactWorldSpec* spec_;
  Trajectory trajectory_;
  FactSet survivors_;
  int turn_ = 0;
  int open_worker_ = 0;
  int worker_steps_ = 0;
};

// Binary terminal success: the surviving gathered facts (grants minus
// corruptions, in record order) must cover the required set and the
// terminal answer must equal the survivors restricted to the required set.
// Throws std::logic_error for non-terminal trajectories.
int terminal_accuracy(const Trajectory& trajectory);

// Re-evaluates terminal accuracy with every record of masked-out agents
// deleted. Recorded outcomes of surviving agents are preserved verbatim;
// nothing is re-rolled. Masking the planner (agent 0) yields 0. The
// coalition is over agents {0} + worker slots; unknown slots are an error.
int counterfactual_replay(const Trajectory& trajectory, Coalition coalition);

// The trajectory's cooperative game: agents {0} + M_i, coalition values by
// counterfactual replay, memoized per coalition. game.evaluations() counts
// the replays actually performed.
CooperativeGame trajectory_game(const Trajectory& trajectory);

}  // namespace sharp

#endif  // SHARP_FACTWORLD_HPP_
