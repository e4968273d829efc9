#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdp/lp.hpp"
#include "pdp/occupancy.hpp"
#include "pdp/pricing_env.hpp"
#include "pdp/topology.hpp"

namespace pdp {

struct ConstrainedOptimum {
  OccupancyMeasure q_star;
  double value = 0.0;
  bool feasible = true;
  double max_dual_infeasibility = 0.0;  // worst negative reduced cost, as a magnitude
};

namespace detail {

// Flow equalities of the occupancy polytope in (state, action) marginal
// variables under a fixed transition function: entry mass one, and at every
// later state the out-mass equals the P-weighted in-mass. One variable per
// pair; edge occupancies are recovered as w(x,a) * P(x'|x,a).
struct MarginalLp {
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  int num_pairs = 0;

  explicit MarginalLp(const TransitionFn& P) {
    const auto& topo = *P.topo;
    num_pairs = topo.num_pairs();
    StateId entry = topo.states_in_layer(0).front();
    {
      std::vector<double> row(num_pairs, 0.0);
      for (int i = 0; i < topo.num_actions_of(entry); ++i)
        row[topo.first_pair_of(entry) + i] = 1.0;
      A.push_back(std::move(row));
      b.push_back(1.0);
    }
    for (int k = 1; k < topo.num_layers(); ++k) {
      for (StateId x : topo.states_in_layer(k)) {
        std::vector<double> row(num_pairs, 0.0);
        for (int i = 0; i < topo.num_actions_of(x); ++i)
          row[topo.first_pair_of(x) + i] = 1.0;
        for (EdgeId e : topo.in_edges(x)) row[topo.edge(e).pair] -= P.p[e];
        A.push_back(std::move(row));
        b.push_back(0.0);
      }
    }
  }
};

inline OccupancyMeasure occupancy_from_marginals(const TransitionFn& P,
                                                 const std::vector<double>& w) {
  OccupancyMeasure occ(P.topo);
  const auto& topo = *P.topo;
  for (EdgeId e = 0; e < topo.num_edges(); ++e)
    occ.q[e] = std::max(0.0, w[topo.edge(e).pair]) * P.p[e];
  occ.refresh_marginals();
  return occ;
}

}  // namespace detail

// Reward-optimal occupancy under the expected-constraint budget, solved as a
// small dense LP over state-action marginals. When no occupancy satisfies
// the budget, returns the least-violating one (ties broken by reward) with
// feasible = false.
inline ConstrainedOptimum optimal_constrained_occupancy(const GroundTruth& gt) {
  const auto& topo = *gt.P.topo;
  detail::MarginalLp base(gt.P);
  const int n = base.num_pairs;

  // Least achievable expected violation.
  std::vector<double> min_g_cost(n);
  for (int j = 0; j < n; ++j) min_g_cost[j] = gt.mean_constraint[j];
  auto g_res = SimplexLp::solve(base.A, base.b, min_g_cost);
  if (g_res.status != SimplexLp::Status::optimal)
    throw std::runtime_error("constrained optimum: flow polytope LP failed");
  const double g_min = g_res.value;

  std::vector<double> cost(n);
  for (int j = 0; j < n; ++j) cost[j] = -gt.mean_reward[j];

  ConstrainedOptimum out;
  SimplexLp::Result res;
  if (g_min <= 1e-12) {
    // Feasible: maximize reward subject to the budget (slack variable on the
    // constraint row).
    auto A = base.A;
    auto b = base.b;
    for (auto& row : A) row.push_back(0.0);
    std::vector<double> grow(n + 1, 0.0);
    for (int j = 0; j < n; ++j) grow[j] = gt.mean_constraint[j];
    grow[n] = 1.0;
    A.push_back(std::move(grow));
    b.push_back(0.0);
    auto c2 = cost;
    c2.push_back(0.0);
    res = SimplexLp::solve(A, b, c2);
    if (res.status != SimplexLp::Status::optimal)
      throw std::runtime_error("constrained optimum: reward LP failed");
    out.feasible = true;
  } else {
    // Infeasible: among least-violating occupancies, maximize reward.
    auto A = base.A;
    auto b = base.b;
    std::vector<double> grow(n, 0.0);
    for (int j = 0; j < n; ++j) grow[j] = gt.mean_constraint[j];
    A.push_back(std::move(grow));
    b.push_back(g_min);
    res = SimplexLp::solve(A, b, cost);
    if (res.status != SimplexLp::Status::optimal)
      throw std::runtime_error("constrained optimum: tie-break LP failed");
    out.feasible = false;
  }

  std::vector<double> w(res.x.begin(), res.x.begin() + n);
  out.q_star = detail::occupancy_from_marginals(gt.P, w);
  out.value = -res.value;
  for (double rc : res.reduced_costs)
    out.max_dual_infeasibility = std::max(out.max_dual_infeasibility, -rc);
  return out;
}

// Per-round series of a completed run plus run metadata. Cumulative values
// are exact prefix sums of the instantaneous expected series.
struct MetricsSeries {
  std::vector<double> inst_reward;     // mean-reward vector dotted with the played occupancy
  std::vector<double> inst_violation;  // same for the constraint vector
  std::vector<double> cum_regret;
  std::vector<double> cum_violation;
  std::vector<double> mean_reward;     // running average of inst_reward
  std::vector<double> lambda;
  std::vector<int> epoch;
  double baseline_value = 0.0;         // optimal value per round against the averaged model
  bool baseline_feasible = true;
  long horizon = 0;
  std::uint64_t seed = 0;
  std::string setting;

  void reserve(long T) {
    inst_reward.reserve(T);
    inst_violation.reserve(T);
    cum_regret.reserve(T);
    cum_violation.reserve(T);
    mean_reward.reserve(T);
    lambda.reserve(T);
    epoch.reserve(T);
  }

  void push_round(double reward, double violation, double lam, int ep) {
    double prev_regret = cum_regret.empty() ? 0.0 : cum_regret.back();
    double prev_violation = cum_violation.empty() ? 0.0 : cum_violation.back();
    double prev_reward_sum =
        mean_reward.empty() ? 0.0 : mean_reward.back() * double(mean_reward.size());
    inst_reward.push_back(reward);
    inst_violation.push_back(violation);
    cum_regret.push_back(prev_regret + baseline_value - reward);
    cum_violation.push_back(prev_violation + violation);
    mean_reward.push_back((prev_reward_sum + reward) / double(inst_reward.size()));
    lambda.push_back(lam);
    epoch.push_back(ep);
  }
};

// Prefix-sum helpers over completed instantaneous series; the regret
// baseline is the constrained optimum of the horizon-averaged model.
inline std::vector<double> cumulative_regret(const std::vector<double>& inst_reward,
                                             double baseline_value) {
  std::vector<double> out(inst_reward.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < inst_reward.size(); ++t) {
    acc += baseline_value - inst_reward[t];
    out[t] = acc;
  }
  return out;
}

inline std::vector<double> cumulative_violation(const std::vector<double>& inst_violation) {
  std::vector<double> out(inst_violation.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < inst_violation.size(); ++t) {
    acc += inst_violation[t];
    out[t] = acc;
  }
  return out;
}

inline std::vector<double> running_mean(const std::vector<double>& series) {
  std::vector<double> out(series.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    acc += series[t];
    out[t] = acc / double(t + 1);
  }
  return out;
}

}  // namespace pdp
