#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pdp/topology.hpp"

namespace pdp {

// Transition function over a layered topology, stored per edge. Each
// (state, action) row is a distribution over that pair's successors.
struct TransitionFn {
  TopologyPtr topo;
  std::vector<double> p;  // per edge

  TransitionFn() = default;
  explicit TransitionFn(TopologyPtr t) : topo(std::move(t)), p(topo->num_edges(), 0.0) {}

  double operator()(EdgeId e) const { return p[e]; }

  static TransitionFn uniform(const TopologyPtr& t) {
    TransitionFn f(t);
    for (PairId q = 0; q < t->num_pairs(); ++q) {
      int n = t->num_successors(q);
      for (EdgeId e = t->pair_edges_begin(q); e < t->pair_edges_end(q); ++e)
        f.p[e] = 1.0 / double(n);
    }
    return f;
  }

  // Row sums to 1, support within topology edges, entries in [0, 1].
  void check(double tol = 1e-12) const {
    for (PairId q = 0; q < topo->num_pairs(); ++q) {
      if (topo->num_successors(q) == 0) continue;
      double sum = 0.0;
      for (EdgeId e = topo->pair_edges_begin(q); e < topo->pair_edges_end(q); ++e) {
        if (p[e] < -tol || p[e] > 1.0 + tol)
          throw std::invalid_argument("transition entry out of [0,1]");
        sum += p[e];
      }
      if (std::fabs(sum - 1.0) > tol)
        throw std::invalid_argument("transition row does not sum to 1 at state " +
                                    topo->state_name(topo->pair_state(q)));
    }
  }
};

// Per-edge box [lo, hi] around an empirical transition; rows additionally
// live on the probability simplex. Successor distributions inside the box
// form the transition uncertainty set used by optimistic estimation and by
// the occupancy update.
struct TransitionBox {
  TopologyPtr topo;
  std::vector<double> lo, hi;  // per edge, clipped to [0, 1]

  TransitionBox() = default;
  explicit TransitionBox(TopologyPtr t)
      : topo(std::move(t)), lo(topo->num_edges(), 0.0), hi(topo->num_edges(), 1.0) {}

  bool contains(const TransitionFn& f, double tol = 0.0) const {
    for (EdgeId e = 0; e < topo->num_edges(); ++e)
      if (f.p[e] < lo[e] - tol || f.p[e] > hi[e] + tol) return false;
    return true;
  }
};

// Randomized action choice per state.
struct Policy {
  TopologyPtr topo;
  std::vector<double> pi;  // per pair

  Policy() = default;
  explicit Policy(TopologyPtr t) : topo(std::move(t)), pi(topo->num_pairs(), 0.0) {}

  double operator()(PairId p) const { return pi[p]; }
  double prob(StateId x, ActionId a) const { return pi[topo->pair_id(x, a)]; }

  static Policy uniform(const TopologyPtr& t) {
    Policy pol(t);
    for (StateId x = 0; x < t->num_states(); ++x) {
      int n = t->num_actions_of(x);
      for (int i = 0; i < n; ++i) pol.pi[t->first_pair_of(x) + i] = 1.0 / double(n);
    }
    return pol;
  }

  void check(double tol = 1e-12) const {
    for (StateId x = 0; x < topo->num_states(); ++x) {
      double sum = 0.0;
      for (int i = 0; i < topo->num_actions_of(x); ++i) {
        double v = pi[topo->first_pair_of(x) + i];
        if (v < -tol) throw std::invalid_argument("negative policy entry");
        sum += v;
      }
      if (std::fabs(sum - 1.0) > tol)
        throw std::invalid_argument("policy row does not sum to 1 at " + topo->state_name(x));
    }
  }
};

// Occupancy measure: per-edge visit probabilities q(x, a, x') plus cached
// (state, action) and state marginals. Marginals of final-layer states have
// no outgoing edges and are taken from the in-flow instead (the final layer
// carries exactly one synthetic action).
struct OccupancyMeasure {
  TopologyPtr topo;
  std::vector<double> q;            // per edge
  std::vector<double> pair_mass;    // per pair
  std::vector<double> state_mass;   // per state

  OccupancyMeasure() = default;
  explicit OccupancyMeasure(TopologyPtr t)
      : topo(std::move(t)),
        q(topo->num_edges(), 0.0),
        pair_mass(topo->num_pairs(), 0.0),
        state_mass(topo->num_states(), 0.0) {}

  double operator()(EdgeId e) const { return q[e]; }

  void refresh_marginals() {
    const auto& topo_ = *topo;
    std::fill(pair_mass.begin(), pair_mass.end(), 0.0);
    std::fill(state_mass.begin(), state_mass.end(), 0.0);
    for (PairId p = 0; p < topo_.num_pairs(); ++p)
      for (EdgeId e = topo_.pair_edges_begin(p); e < topo_.pair_edges_end(p); ++e)
        pair_mass[p] += q[e];
    for (StateId x = 0; x < topo_.num_states(); ++x)
      for (int i = 0; i < topo_.num_actions_of(x); ++i)
        state_mass[x] += pair_mass[topo_.first_pair_of(x) + i];
    // Final layer: mass flows in but there are no outgoing edges.
    for (StateId x : topo_.states_in_layer(topo_.num_layers() - 1)) {
      double in = 0.0;
      for (EdgeId e : topo_.in_edges(x)) in += q[e];
      state_mass[x] = in;
      pair_mass[topo_.first_pair_of(x)] = in;
    }
  }
};

enum class ValidityCondition { layer_mass, flow_conservation, transition_match };

struct ValidityFailure {
  ValidityCondition condition;
  std::string location;
  double residual = 0.0;
};

struct ValidityReport {
  bool valid = true;
  std::vector<ValidityFailure> violated;

  void add(ValidityCondition c, std::string where, double residual) {
    valid = false;
    violated.push_back({c, std::move(where), residual});
  }
};

// Exact occupancy of (P, pi) by forward dynamic programming over layers:
// reach(x0) = 1, q(x,a,x') = reach(x) * pi(a|x) * P(x'|x,a).
inline OccupancyMeasure occupancy_from(const TransitionFn& P, const Policy& pi) {
  require_same_topology(P.topo, pi.topo);
  const auto& topo = *P.topo;
  OccupancyMeasure occ(P.topo);
  std::vector<double> reach(topo.num_states(), 0.0);
  reach[topo.states_in_layer(0).front()] = 1.0;
  for (int k = 0; k + 1 < topo.num_layers(); ++k) {
    for (StateId x : topo.states_in_layer(k)) {
      for (int i = 0; i < topo.num_actions_of(x); ++i) {
        PairId p = topo.first_pair_of(x) + i;
        double mass = reach[x] * pi.pi[p];
        for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e) {
          occ.q[e] = mass * P.p[e];
          reach[topo.edge(e).to] += occ.q[e];
        }
      }
    }
  }
  occ.refresh_marginals();
  return occ;
}

namespace detail {

inline void check_mass_and_flow(const OccupancyMeasure& occ, double tol, ValidityReport& rep) {
  const auto& topo = *occ.topo;
  for (int k = 0; k < topo.num_steps(); ++k) {
    double mass = 0.0;
    for (EdgeId e = topo.layer_edges_begin(k); e < topo.layer_edges_end(k); ++e)
      mass += occ.q[e];
    if (std::fabs(mass - 1.0) > tol)
      rep.add(ValidityCondition::layer_mass, "layer " + std::to_string(k),
              std::fabs(mass - 1.0));
  }
  // Internal states: in-flow equals out-flow.
  for (int k = 1; k < topo.num_layers() - 1; ++k) {
    for (StateId x : topo.states_in_layer(k)) {
      double in = 0.0, out = 0.0;
      for (EdgeId e : topo.in_edges(x)) in += occ.q[e];
      for (int i = 0; i < topo.num_actions_of(x); ++i) {
        PairId p = topo.first_pair_of(x) + i;
        for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e)
          out += occ.q[e];
      }
      if (std::fabs(in - out) > tol)
        rep.add(ValidityCondition::flow_conservation, topo.state_name(x), std::fabs(in - out));
    }
  }
}

}  // namespace detail

// Checks the three validity conditions of a loop-free occupancy measure:
// unit mass per layer, flow conservation at internal states, and agreement
// of the induced transition with P (within tol on every edge with positive
// pair mass).
inline ValidityReport validate_occupancy(const OccupancyMeasure& occ, const TransitionFn& P,
                                         double tol) {
  require_same_topology(occ.topo, P.topo);
  ValidityReport rep;
  detail::check_mass_and_flow(occ, tol, rep);
  const auto& topo = *occ.topo;
  for (PairId p = 0; p < topo.num_pairs(); ++p) {
    double row = 0.0;
    for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e) row += occ.q[e];
    if (row <= tol) continue;  // unvisited rows do not pin the transition
    for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e) {
      double induced = occ.q[e] / row;
      if (std::fabs(induced - P.p[e]) > tol) {
        const Edge& ed = topo.edge(e);
        rep.add(ValidityCondition::transition_match,
                topo.state_name(ed.from) + "/" + topo.action_name(ed.action) + "->" +
                    topo.state_name(ed.to),
                std::fabs(induced - P.p[e]));
      }
    }
  }
  return rep;
}

// Same check against a transition uncertainty set: the induced transition of
// every visited row must lie inside the per-edge box.
inline ValidityReport validate_occupancy(const OccupancyMeasure& occ, const TransitionBox& box,
                                         double tol) {
  require_same_topology(occ.topo, box.topo);
  ValidityReport rep;
  detail::check_mass_and_flow(occ, tol, rep);
  const auto& topo = *occ.topo;
  for (PairId p = 0; p < topo.num_pairs(); ++p) {
    double row = 0.0;
    for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e) row += occ.q[e];
    if (row <= tol) continue;
    for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e) {
      double induced = occ.q[e] / row;
      double slack = std::max(box.lo[e] - induced, induced - box.hi[e]);
      if (slack > tol) {
        const Edge& ed = topo.edge(e);
        rep.add(ValidityCondition::transition_match,
                topo.state_name(ed.from) + "/" + topo.action_name(ed.action) + "->" +
                    topo.state_name(ed.to),
                slack);
      }
    }
  }
  return rep;
}

// pi(a|x) = q(x,a) / q(x); zero-mass states fall back to uniform so the
// result is always a well-formed policy.
inline Policy induced_policy(const OccupancyMeasure& occ) {
  const auto& topo = *occ.topo;
  Policy pol(occ.topo);
  for (StateId x = 0; x < topo.num_states(); ++x) {
    int n = topo.num_actions_of(x);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += occ.pair_mass[topo.first_pair_of(x) + i];
    for (int i = 0; i < n; ++i) {
      PairId p = topo.first_pair_of(x) + i;
      pol.pi[p] = total > 0.0 ? occ.pair_mass[p] / total : 1.0 / double(n);
    }
  }
  return pol;
}

// P(x'|x,a) = q(x,a,x') / q(x,a); zero-mass rows fall back to uniform.
inline TransitionFn induced_transition(const OccupancyMeasure& occ) {
  const auto& topo = *occ.topo;
  TransitionFn f(occ.topo);
  for (PairId p = 0; p < topo.num_pairs(); ++p) {
    int n = topo.num_successors(p);
    if (n == 0) continue;
    double row = 0.0;
    for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e) row += occ.q[e];
    for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e)
      f.p[e] = row > 0.0 ? occ.q[e] / row : 1.0 / double(n);
  }
  return f;
}

// <v, q> over (state, action) pairs, including the final layer's noop pair.
inline double expected_value(const OccupancyMeasure& occ, const std::vector<double>& v) {
  if (int(v.size()) != occ.topo->num_pairs())
    throw std::invalid_argument("expected_value: vector does not match pair index");
  double total = 0.0;
  for (PairId p = 0; p < occ.topo->num_pairs(); ++p) total += v[p] * occ.pair_mass[p];
  return total;
}

}  // namespace pdp
