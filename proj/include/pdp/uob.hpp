#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "pdp/occupancy.hpp"
#include "pdp/topology.hpp"

namespace pdp {

namespace detail {

// Maximum of sum_z p(z) * value(z) over row distributions p inside the
// per-successor box intersected with the simplex. Start every successor at
// its lower bound, then pour the remaining mass greedily into successors of
// decreasing downstream value. Feasible whenever the box is built around a
// stochastic row.
inline double optimistic_row_value(const TransitionBox& box, PairId pair,
                                   const std::vector<double>& value) {
  const auto& topo = *box.topo;
  EdgeId begin = topo.pair_edges_begin(pair), end = topo.pair_edges_end(pair);
  int n = end - begin;
  double mass = 1.0, total = 0.0;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return value[topo.edge(begin + i).to] > value[topo.edge(begin + j).to];
  });
  for (int i = 0; i < n; ++i) {
    double lo = box.lo[begin + i];
    mass -= lo;
    total += lo * value[topo.edge(begin + i).to];
  }
  for (int i = 0; i < n && mass > 0.0; ++i) {
    EdgeId e = begin + order[i];
    double extra = std::min(mass, box.hi[e] - box.lo[e]);
    if (extra <= 0.0) continue;
    total += extra * value[topo.edge(e).to];
    mass -= extra;
  }
  return total;
}

}  // namespace detail

// Upper occupancy bound: the maximum probability, over all transition
// functions in the box, that policy pi visits the given (state, action)
// pair. Backward pass from the target's layer: w(y) is the largest
// probability of hitting the target state from y, with each row maximized
// independently (rows are independent constraints, so the per-row greedy is
// exact). The bound is then w(x_init) * pi(a | target state).
inline double comp_uob(const Policy& pi, PairId target, const TransitionBox& box) {
  require_same_topology(pi.topo, box.topo);
  const auto& topo = *pi.topo;
  StateId goal = topo.pair_state(target);
  int goal_layer = topo.layer_of(goal);
  if (goal_layer == 0) return pi.pi[target];

  std::vector<double> w(topo.num_states(), 0.0);
  w[goal] = 1.0;
  for (int k = goal_layer - 1; k >= 0; --k) {
    for (StateId y : topo.states_in_layer(k)) {
      double acc = 0.0;
      for (int i = 0; i < topo.num_actions_of(y); ++i) {
        PairId p = topo.first_pair_of(y) + i;
        acc += pi.pi[p] * detail::optimistic_row_value(box, p, w);
      }
      w[y] = acc;
    }
  }
  return w[topo.states_in_layer(0).front()] * pi.pi[target];
}

}  // namespace pdp
