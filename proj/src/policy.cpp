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

#include "sharp/policy.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sharp/errors.hpp"

namespace sharp {

PolicyShape PolicyShape::for_spec(const FactWorldSpec& spec) {
  PolicyShape shape;
  shape.planner_buckets = spec.planner_turn_budget * kPlannerCoverBuckets;
  shape.planner_actions = spec.planner_actions();
  shape.worker_buckets = spec.n_templates() * spec.worker_step_budget * 2;
  shape.worker_actions = spec.n_tools();
  return shape;
}

int planner_context_bucket(const FactWorldSpec& spec, int turn,
                           int covered_required) {
  if (turn < 0 || turn >= spec.planner_turn_budget)
    throw std::out_of_range("planner turn outside budget");
  int cover = covered_required < kPlannerCoverBuckets ? covered_required
                                                      : kPlannerCoverBuckets - 1;
  return turn * kPlannerCoverBuckets + cover;
}

int worker_context_bucket(const FactWorldSpec& spec, int template_id, int step,
                          bool target_covered) {
  if (template_id < 0 || template_id >= spec.n_templates())
    throw std::out_of_range("unknown template id");
  if (step < 0 || step >= spec.worker_step_budget)
    throw std::out_of_range("worker step outside budget");
  return (template_id * spec.worker_step_budget + step) * 2 +
         (target_covered ? 1 : 0);
}

PolicyGradient PolicyGradient::zeros(const PolicyShape& shape) {
  PolicyGradient g;
  g.planner =
      Eigen::MatrixXd::Zero(shape.planner_buckets, shape.planner_actions);
  g.worker = Eigen::MatrixXd::Zero(shape.worker_buckets, shape.worker_actions);
  return g;
}

PolicyGradient& PolicyGradient::operator+=(const PolicyGradient& other) {
  planner += other.planner;
  worker += other.worker;
  return *this;
}

PolicyGradient& PolicyGradient::operator*=(double scale) {
  planner *= scale;
  worker *= scale;
  return *this;
}

double PolicyGradient::max_abs() const {
  double p = planner.size() > 0 ? planner.cwiseAbs().maxCoeff() : 0.0;
  double w = worker.size() > 0 ? worker.cwiseAbs().maxCoeff() : 0.0;
  return p > w ? p : w;
}

PolicyParams PolicyParams::zeros(const PolicyShape& shape) {
  PolicyParams params;
  params.shape_ = shape;
  params.planner_ =
      Eigen::MatrixXd::Zero(shape.planner_buckets, shape.planner_actions);
  params.worker_ =
      Eigen::MatrixXd::Zero(shape.worker_buckets, shape.worker_actions);
  return params;
}

PolicyParams PolicyParams::from_parts(const PolicyShape& shape,
                                      Eigen::MatrixXd planner,
                                      Eigen::MatrixXd worker,
                                      std::uint64_t version) {
  if (planner.rows() != shape.planner_buckets ||
      planner.cols() != shape.planner_actions ||
      worker.rows() != shape.worker_buckets ||
      worker.cols() != shape.worker_actions)
    throw std::invalid_argument("logit matrices do not match the shape");
  PolicyParams params;
  params.shape_ = shape;
  params.planner_ = std::move(planner);
  params.worker_ = std::move(worker);
  params.version_ = version;
  return params;
}

void PolicyParams::set_logit(Role role, int bucket, int action, double value) {
  if (!std::isfinite(value))
    throw std::invalid_argument("logits must stay finite");
  (role == Role::planner ? planner_ : worker_)(bucket, action) = value;
  ++version_;
}

void PolicyParams::apply_update(const PolicyGradient& gradient, double scale) {
  planner_ += scale * gradient.planner;
  worker_ += scale * gradient.worker;
  ++version_;
}

namespace {

const Eigen::MatrixXd& role_logits(const PolicyParams& params, Role role) {
  return params.logits(role);
}

void check_context(const PolicyParams& params, RoleContext ctx) {
  const Eigen::MatrixXd& rows = role_logits(params, ctx.role);
  if (ctx.bucket < 0 || ctx.bucket >= rows.rows())
    throw std::out_of_range("context bucket outside the declared shape");
}

}  // namespace

Eigen::VectorXd action_distribution(const PolicyParams& params,
                                    RoleContext ctx) {
  check_context(params, ctx);
  const auto row = role_logits(params, ctx.role).row(ctx.bucket);
  Eigen::VectorXd shifted = row.transpose().array() - row.maxCoeff();
  Eigen::VectorXd probs = shifted.array().exp();
  return probs / probs.sum();
}

Eigen::VectorXd action_log_distribution(const PolicyParams& params,
                                        RoleContext ctx) {
  check_context(params, ctx);
  const auto row = role_logits(params, ctx.role).row(ctx.bucket);
  Eigen::VectorXd shifted = row.transpose().array() - row.maxCoeff();
  double log_norm = std::log(shifted.array().exp().sum());
  return shifted.array() - log_norm;
}

int sample_action(const Eigen::Ref<const Eigen::VectorXd>& dist,
                  DrawSource& draws) {
  const double u = draws.u01();
  double cum = 0.0;
  const int n = static_cast<int>(dist.size());
  for (int a = 0; a < n; ++a) {
    cum += dist[a];
    if (u < cum) return a;
  }
  return n - 1;
}

namespace {

template <typename Visit>
void visit_agent_actions(const Trajectory& trajectory, AgentId agent,
                         Visit&& visit) {
  if (agent.role == Role::planner) {
    if (agent.slot != 0)
      throw std::invalid_argument("planner slot is always 0");
    for (const PlannerActionRecord& record : trajectory.planner_trace)
      visit(RoleContext{Role::planner, record.context_bucket},
            record.action_id);
    return;
  }
  if (agent.slot < 1 || agent.slot > trajectory.worker_count())
    throw std::invalid_argument("agent did not participate in trajectory");
  for (const ToolCallRecord& record :
       trajectory.worker_traces[agent.slot - 1])
    visit(RoleContext{Role::worker, record.context_bucket}, record.tool_id);
}

}  // namespace

double agent_logprob_sum(const PolicyParams& params,
                         const Trajectory& trajectory, AgentId agent) {
  double sum = 0.0;
  visit_agent_actions(trajectory, agent, [&](RoleContext ctx, int action) {
    sum += action_log_distribution(params, ctx)[action];
  });
  return sum;
}

PolicyGradient grad_agent_logprob(const PolicyParams& params,
                                  const Trajectory& trajectory,
                                  AgentId agent) {
  PolicyGradient g = PolicyGradient::zeros(params.shape());
  visit_agent_actions(trajectory, agent, [&](RoleContext ctx, int action) {
    Eigen::VectorXd probs = action_distribution(params, ctx);
    Eigen::MatrixXd& rows = ctx.role == Role::planner ? g.planner : g.worker;
    rows.row(ctx.bucket) -= probs.transpose();
    rows(ctx.bucket, action) += 1.0;
  });
  return g;
}

void save_policy(const PolicyParams& params, std::ostream& out) {
  const PolicyShape& s = params.shape();
  out << "sharp-policy-v1\n";
  out << "version " << params.version() << "\n";
  out << "planner " << s.planner_buckets << " " << s.planner_actions << "\n";
  out << "worker " << s.worker_buckets << " " << s.worker_actions << "\n";
  char buf[48];
  auto dump = [&](char tag, const Eigen::MatrixXd& m) {
    for (Eigen::Index b = 0; b < m.rows(); ++b) {
      for (Eigen::Index a = 0; a < m.cols(); ++a) {
        std::snprintf(buf, sizeof buf, "%a", m(b, a));
        out << tag << " " << b << " " << a << " " << buf << "\n";
      }
    }
  };
  dump('p', params.logits(Role::planner));
  dump('w', params.logits(Role::worker));
}

void save_policy_file(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open checkpoint for writing: " + path, 0);
  save_policy(params, out);
}

PolicyParams load_policy(std::istream& in) {
  std::string line;
  long line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line))
      throw ParseError("unexpected end of checkpoint", line_no + 1);
    ++line_no;
    return line;
  };

  if (next_line() != "sharp-policy-v1")
    throw ParseError("unknown checkpoint header", line_no);

  std::uint64_t version = 0;
  {
    std::istringstream row(next_line());
    std::string key;
    if (!(row >> key >> version) || key != "version")
      throw ParseError("expected 'version <counter>'", line_no);
  }
  PolicyShape shape;
  {
    std::istringstream row(next_line());
    std::string key;
    if (!(row >> key >> shape.planner_buckets >> shape.planner_actions) ||
        key != "planner")
      throw ParseError("expected 'planner <buckets> <actions>'", line_no);
  }
  {
    std::istringstream row(next_line());
    std::string key;
    if (!(row >> key >> shape.worker_buckets >> shape.worker_actions) ||
        key != "worker")
      throw ParseError("expected 'worker <buckets> <actions>'", line_no);
  }

  Eigen::MatrixXd planner =
      Eigen::MatrixXd::Zero(shape.planner_buckets, shape.planner_actions);
  Eigen::MatrixXd worker =
      Eigen::MatrixXd::Zero(shape.worker_buckets, shape.worker_actions);
  const long expected = static_cast<long>(shape.planner_buckets) *
                            shape.planner_actions +
                        static_cast<long>(shape.worker_buckets) *
                            shape.worker_actions;
  for (long k = 0; k < expected; ++k) {
    std::istringstream row(next_line());
    std::string tag, value_text;
    int bucket = 0, action = 0;
    if (!(row >> tag >> bucket >> action >> value_text) ||
        (tag != "p" && tag != "w"))
      throw ParseError("expected '<p|w> <bucket> <action> <logit>'", line_no);
    char* end = nullptr;
    double value = std::strtod(value_text.c_str(), &end);
    if (end == value_text.c_str() || *end != '\0')
      throw ParseError("bad logit value", line_no);
    Eigen::MatrixXd& rows = tag == "p" ? planner : worker;
    if (bucket < 0 || bucket >= rows.rows() || action < 0 ||
        action >= rows.cols())
      throw ParseError("logit coordinate outside declared shape", line_no);
    rows(bucket, action) = value;
  }
  return PolicyParams::from_parts(shape, std::move(planner), std::move(worker),
                                  version);
}

PolicyParams load_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint: " + path, 0);
  return load_policy(in);
}

}  // namespace sharp
