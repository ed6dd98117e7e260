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

#ifndef SHARP_GAME_HPP_
#define SHARP_GAME_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace sharp {

// Enumeration bound for exact Shapley computation and dense value tables.
inline constexpr int kMaxExactAgents = 20;

// A coalition of agents drawn from {0, ..., n-1}. Bitmask encoding makes
// set equality plain integer equality (the canonical form).
class Coalition {
 public:
  constexpr Coalition() = default;
  static constexpr Coalition from_mask(std::uint32_t mask) {
    return Coalition(mask);
  }
  static constexpr Coalition full(int n) {
    return Coalition(n >= 32 ? ~0u : ((1u << n) - 1u));
  }
  static constexpr Coalition single(int agent) {
    return Coalition(1u << agent);
  }

  constexpr bool contains(int agent) const {
    return (bits_ >> agent) & 1u;
  }
  constexpr Coalition with(int agent) const {
    return Coalition(bits_ | (1u << agent));
  }
  constexpr Coalition without(int agent) const {
    return Coalition(bits_ & ~(1u << agent));
  }
  constexpr bool subset_of(Coalition other) const {
    return (bits_ & ~other.bits_) == 0;
  }
  int size() const { return __builtin_popcount(bits_); }
  constexpr std::uint32_t mask() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }

  friend constexpr bool operator==(Coalition a, Coalition b) {
    return a.bits_ == b.bits_;
  }

 private:
  explicit constexpr Coalition(std::uint32_t bits) : bits_(bits) {}
  std::uint32_t bits_ = 0;
};

// Cooperative game: n agents and a total value function over coalitions.
// Backed either by a dense table (all 2^n values up front) or by a lazy
// evaluator with per-coalition memoization. Evaluation is deterministic;
// copies share the underlying table/cache.
class CooperativeGame {
 public:
  static CooperativeGame from_table(int n_agents, std::vector<double> values);
  static CooperativeGame from_function(int n_agents,
                                       std::function<double(Coalition)> value,
                                       bool memoize = true);

  int n_agents() const;
  double value(Coalition coalition) const;
  Coalition grand_coalition() const { return Coalition::full(n_agents()); }

  // Number of underlying evaluator calls so far (memo hits excluded).
  // Used as the counterfactual-replay cost counter for trajectory games.
  std::uint64_t evaluations() const;

 private:
  struct Impl;
  explicit CooperativeGame(std::shared_ptr<Impl> impl);
  std::shared_ptr<Impl> impl_;
};

// Per-agent credit vector phi, length n_agents.
using ShapleyVector = Eigen::VectorXd;

// Coalition weight |S|! * (n - |S| - 1)! / n!, computed as
// 1 / (n * C(n-1, |S|)) to stay exact in double for n <= kMaxExactAgents.
// Throws std::invalid_argument when coalition_size >= n or n < 1.
double coalition_weight(int coalition_size, int n);

// Exact Shapley value by full coalition enumeration. Satisfies the
// efficiency, symmetry, dummy and linearity axioms up to rounding.
// Throws std::invalid_argument when n_agents > kMaxExactAgents.
ShapleyVector shapley_exact(const CooperativeGame& game);

struct McShapleyEstimate {
  ShapleyVector phi;
  Eigen::VectorXd std_error;  // standard error of the mean, per agent
  int samples = 0;
};

// Monte-Carlo Shapley estimate by averaging marginal contributions over
// uniformly sampled agent orderings. Unbiased; bit-exact under a fixed seed.
McShapleyEstimate shapley_permutation_mc(const CooperativeGame& game,
                                         int samples, std::uint64_t seed);

// Grand-coalition single-ablation credit v(N) - v(N \ {m}) per agent: the
// tractable credit used at trajectory scale. Coincides with shapley_exact
// for additive games and for single-agent games.
ShapleyVector single_ablation_credit(const CooperativeGame& game);

// Residuals of the Shapley axioms for a given credit vector. Symmetric
// pairs and dummies are detected by exhaustive coalition comparison, so
// detection is limited to n_agents <= 12.
struct AxiomReport {
  double efficiency_residual = 0.0;  // |sum(phi) - (v(N) - v(empty))|
  double max_symmetry_violation = 0.0;
  double max_dummy_violation = 0.0;
  int symmetric_pairs = 0;
  int dummy_agents = 0;
};

AxiomReport axiom_report(const CooperativeGame& game, const ShapleyVector& phi);

}  // namespace sharp

#endif  // SHARP_GAME_HPP_
