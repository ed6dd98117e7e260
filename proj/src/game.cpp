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

#include "sharp/game.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "sharp/rng.hpp"

namespace sharp {

struct CooperativeGame::Impl {
  int n_agents = 0;
  std::vector<double> table;  // dense, size 2^n (empty when lazy)
  std::function<double(Coalition)> eval;
  bool memoize = true;

  mutable std::mutex mu;
  mutable std::unordered_map<std::uint32_t, double> cache;
  mutable std::atomic<std::uint64_t> evaluations{0};
};

CooperativeGame::CooperativeGame(std::shared_ptr<Impl> impl)
    : impl_(std::move(impl)) {}

CooperativeGame CooperativeGame::from_table(int n_agents,
                                            std::vector<double> values) {
  if (n_agents < 1) throw std::invalid_argument("game needs >= 1 agent");
  if (n_agents > kMaxExactAgents)
    throw std::invalid_argument("dense tables are limited to " +
                                std::to_string(kMaxExactAgents) + " agents");
  const std::size_t expected = std::size_t{1} << n_agents;
  if (values.size() != expected)
    throw std::invalid_argument("value table must cover all " +
                                std::to_string(expected) + " coalitions");
  auto impl = std::make_shared<Impl>();
  impl->n_agents = n_agents;
  impl->table = std::move(values);
  return CooperativeGame(std::move(impl));
}

CooperativeGame CooperativeGame::from_function(
    int n_agents, std::function<double(Coalition)> value, bool memoize) {
  if (n_agents < 1) throw std::invalid_argument("game needs >= 1 agent");
  if (n_agents > 31)
    throw std::invalid_argument("coalition encoding supports <= 31 agents");
  auto impl = std::make_shared<Impl>();
  impl->n_agents = n_agents;
  impl->eval = std::move(value);
  impl->memoize = memoize;
  return CooperativeGame(std::move(impl));
}

int CooperativeGame::n_agents() const { return impl_->n_agents; }

double CooperativeGame::value(Coalition coalition) const {
  if (!coalition.subset_of(Coalition::full(impl_->n_agents)))
    throw std::invalid_argument("coalition contains unknown agents");
  if (!impl_->table.empty()) return impl_->table[coalition.mask()];
  if (impl_->memoize) {
    std::lock_guard<std::mutex> lock(impl_->mu);
    auto it = impl_->cache.find(coalition.mask());
    if (it != impl_->cache.end()) return it->second;
    impl_->evaluations.fetch_add(1, std::memory_order_relaxed);
    double v = impl_->eval(coalition);
    impl_->cache.emplace(coalition.mask(), v);
    return v;
  }
  impl_->evaluations.fetch_add(1, std::memory_order_relaxed);
  return impl_->eval(coalition);
}

std::uint64_t CooperativeGame::evaluations() const {
  return impl_->evaluations.load(std::memory_order_relaxed);
}

namespace {

// C(n, k) for n <= kMaxExactAgents; exact in 64-bit.
std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t c = 1;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c;
}

}  // namespace

double coalition_weight(int coalition_size, int n) {
  if (n < 1) throw std::invalid_argument("coalition_weight: n must be >= 1");
  if (coalition_size < 0 || coalition_size >= n)
    throw std::invalid_argument(
        "coalition_weight: coalition size must be in [0, n-1]");
  return 1.0 / (static_cast<double>(n) *
                static_cast<double>(binomial(n - 1, coalition_size)));
}

ShapleyVector shapley_exact(const CooperativeGame& game) {
  const int n = game.n_agents();
  if (n > kMaxExactAgents)
    throw std::invalid_argument("exact Shapley is limited to " +
                                std::to_string(kMaxExactAgents) + " agents");
  std::vector<double> weight(n);
  for (int s = 0; s < n; ++s) weight[s] = coalition_weight(s, n);

  ShapleyVector phi = ShapleyVector::Zero(n);
  const std::uint32_t all = Coalition::full(n).mask();
  for (int m = 0; m < n; ++m) {
    const std::uint32_t rest = all & ~(1u << m);
    // Enumerate the subsets of N \ {m} by stepping through sub-masks.
    std::uint32_t sub = 0;
    while (true) {
      Coalition s = Coalition::from_mask(sub);
      phi[m] += weight[s.size()] * (game.value(s.with(m)) - game.value(s));
      if (sub == rest) break;
      sub = (sub - rest) & rest;
    }
  }
  return phi;
}

McShapleyEstimate shapley_permutation_mc(const CooperativeGame& game,
                                         int samples, std::uint64_t seed) {
  if (samples < 1)
    throw std::invalid_argument("permutation estimator needs samples >= 1");
  const int n = game.n_agents();
  Rng rng(seed);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(n);

  for (int it = 0; it < samples; ++it) {
    for (int i = n - 1; i > 0; --i) {
      int j = rng.index_below(i + 1);
      std::swap(order[i], order[j]);
    }
    Coalition s;
    double prev = game.value(s);
    for (int agent : order) {
      s = s.with(agent);
      double cur = game.value(s);
      double marginal = cur - prev;
      sum[agent] += marginal;
      sum_sq[agent] += marginal * marginal;
      prev = cur;
    }
  }

  McShapleyEstimate est;
  est.samples = samples;
  est.phi = sum / static_cast<double>(samples);
  est.std_error = Eigen::VectorXd::Zero(n);
  if (samples > 1) {
    for (int m = 0; m < n; ++m) {
      double var = (sum_sq[m] - sum[m] * sum[m] / samples) / (samples - 1);
      est.std_error[m] = std::sqrt(std::max(0.0, var) / samples);
    }
  }
  return est;
}

ShapleyVector single_ablation_credit(const CooperativeGame& game) {
  const int n = game.n_agents();
  const Coalition grand = game.grand_coalition();
  const double v_grand = game.value(grand);
  ShapleyVector credit(n);
  for (int m = 0; m < n; ++m)
    credit[m] = v_grand - game.value(grand.without(m));
  return credit;
}

namespace {

constexpr int kMaxDetectAgents = 12;
constexpr double kDetectTol = 1e-12;

// True when v(S + i) == v(S + j) for every S avoiding both agents.
bool symmetric_pair(const CooperativeGame& game, int i, int j) {
  const int n = game.n_agents();
  const std::uint32_t rest =
      Coalition::full(n).mask() & ~(1u << i) & ~(1u << j);
  std::uint32_t sub = 0;
  while (true) {
    Coalition s = Coalition::from_mask(sub);
    if (std::abs(game.value(s.with(i)) - game.value(s.with(j))) > kDetectTol)
      return false;
    if (sub == rest) break;
    sub = (sub - rest) & rest;
  }
  return true;
}

bool dummy_agent(const CooperativeGame& game, int m) {
  const int n = game.n_agents();
  const std::uint32_t rest = Coalition::full(n).mask() & ~(1u << m);
  std::uint32_t sub = 0;
  while (true) {
    Coalition s = Coalition::from_mask(sub);
    if (std::abs(game.value(s.with(m)) - game.value(s)) > kDetectTol)
      return false;
    if (sub == rest) break;
    sub = (sub - rest) & rest;
  }
  return true;
}

}  // namespace

AxiomReport axiom_report(const CooperativeGame& game,
                         const ShapleyVector& phi) {
  const int n = game.n_agents();
  if (phi.size() != n)
    throw std::invalid_argument("phi length must equal n_agents");

  AxiomReport report;
  const double span = game.value(game.grand_coalition()) - game.value(Coalition());
  report.efficiency_residual = std::abs(phi.sum() - span);

  if (n <= kMaxDetectAgents) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (symmetric_pair(game, i, j)) {
          ++report.symmetric_pairs;
          report.max_symmetry_violation =
              std::max(report.max_symmetry_violation, std::abs(phi[i] - phi[j]));
        }
      }
      if (dummy_agent(game, i)) {
        ++report.dummy_agents;
        report.max_dummy_violation =
            std::max(report.max_dummy_violation, std::abs(phi[i]));
      }
    }
  }
  return report;
}

}  // namespace sharp
