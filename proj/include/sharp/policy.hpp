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

#ifndef SHARP_POLICY_HPP_
#define SHARP_POLICY_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "sharp/factworld.hpp"
#include "sharp/rng.hpp"

namespace sharp {

// What the policy may observe, reduced to a discrete bucket per role:
// planner buckets encode (turn, required-facts-covered count capped at 3);
// worker buckets encode (active template, step, target-covered flag).
struct RoleContext {
  Role role = Role::planner;
  int bucket = 0;
};

inline constexpr int kPlannerCoverBuckets = 4;

struct PolicyShape {
  int planner_buckets = 0;
  int planner_actions = 0;
  int worker_buckets = 0;
  int worker_actions = 0;

  static PolicyShape for_spec(const FactWorldSpec& spec);
  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

int planner_context_bucket(const FactWorldSpec& spec, int turn,
                           int covered_required);
int worker_context_bucket(const FactWorldSpec& spec, int template_id, int step,
                          bool target_covered);

// Gradient of a scalar in the policy's logits; same layout as the logits.
struct PolicyGradient {
  Eigen::MatrixXd planner;  // [planner_buckets x planner_actions]
  Eigen::MatrixXd worker;   // [worker_buckets x worker_actions]

  static PolicyGradient zeros(const PolicyShape& shape);
  PolicyGradient& operator+=(const PolicyGradient& other);
  PolicyGradient& operator*=(double scale);
  double max_abs() const;
};

// Shared policy parameters: one logit row per (role, context bucket). The
// roles live in disjoint rows of the same store, so planner updates can
// never move worker probabilities. Value semantics: a copy is an immutable
// snapshot usable as the old policy.
class PolicyParams {
 public:
  PolicyParams() = default;
  static PolicyParams zeros(const PolicyShape& shape);
  static PolicyParams from_parts(const PolicyShape& shape,
                                 Eigen::MatrixXd planner,
                                 Eigen::MatrixXd worker, std::uint64_t version);

  const PolicyShape& shape() const { return shape_; }
  std::uint64_t version() const { return version_; }

  const Eigen::MatrixXd& logits(Role role) const {
    return role == Role::planner ? planner_ : worker_;
  }
  double logit(Role role, int bucket, int action) const {
    return logits(role)(bucket, action);
  }
  void set_logit(Role role, int bucket, int action, double value);

  // theta += scale * gradient; bumps the version counter.
  void apply_update(const PolicyGradient& gradient, double scale);

 private:
  PolicyShape shape_;
  Eigen::MatrixXd planner_;
  Eigen::MatrixXd worker_;
  std::uint64_t version_ = 0;
};

// Softmax over the context's logit row. Probabilities sum to 1 within
// 1e-12. Throws std::out_of_range for contexts outside the declared shape.
Eigen::VectorXd action_distribution(const PolicyParams& params,
                                    RoleContext ctx);

// Log of action_distribution, computed stably.
Eigen::VectorXd action_log_distribution(const PolicyParams& params,
                                        RoleContext ctx);

// Inverse-CDF sample from a distribution; deterministic under a seed.
int sample_action(const Eigen::Ref<const Eigen::VectorXd>& dist,
                  DrawSource& draws);

// Sum over the agent's own recorded actions of log pi(a | ctx): planner
// dispatch/answer decisions for slot 0, tool calls for worker slots.
// Throws std::invalid_argument when the agent did not participate.
double agent_logprob_sum(const PolicyParams& params,
                         const Trajectory& trajectory, AgentId agent);

// Exact score-function gradient of agent_logprob_sum in the logits; zero
// outside the rows the agent visited.
PolicyGradient grad_agent_logprob(const PolicyParams& params,
                                  const Trajectory& trajectory, AgentId agent);

// Checkpoint format "sharp-policy-v1": header, shape lines, then one
// "<p|w> <bucket> <action> <hexfloat>" line per logit. Round-trips
// bit-exactly.
void save_policy(const PolicyParams& params, std::ostream& out);
void save_policy_file(const PolicyParams& params, const std::string& path);
PolicyParams load_policy(std::istream& in);
PolicyParams load_policy_file(const std::string& path);

}  // namespace sharp

#endif  // SHARP_POLICY_HPP_
