#pragma once

#include <cmath>
#include <vector>

#include "pdp/occupancy.hpp"
#include "pdp/topology.hpp"

namespace pdp {

// Visit counters: running totals plus the snapshot frozen at the start of
// the current epoch. An epoch ends as soon as the running count of any
// visited pair reaches max{1, twice its snapshot}.
struct Counters {
  std::vector<long> pair_total;       // N, per (state, action) pair
  std::vector<long> edge_total;       // M, per (state, action, successor) edge
  std::vector<long> pair_epoch_start; // snapshot of pair_total at epoch start
  std::vector<long> edge_epoch_start; // snapshot of edge_total at epoch start

  explicit Counters(const TopologyPtr& topo)
      : pair_total(topo->num_pairs(), 0),
        edge_total(topo->num_edges(), 0),
        pair_epoch_start(topo->num_pairs(), 0),
        edge_epoch_start(topo->num_edges(), 0) {}

  void record(const std::vector<PairId>& visited, const std::vector<EdgeId>& traversed) {
    for (PairId p : visited) ++pair_total[p];
    for (EdgeId e : traversed) ++edge_total[e];
  }

  bool doubling_reached(const std::vector<PairId>& visited) const {
    for (PairId p : visited)
      if (pair_total[p] >= std::max<long>(1, 2 * pair_epoch_start[p])) return true;
    return false;
  }

  void snapshot() {
    pair_epoch_start = pair_total;
    edge_epoch_start = edge_total;
  }
};

// Per-edge confidence radius around the empirical transition, shrinking
// roughly like sqrt(p_bar / N); log_term = ln(T |X| |A| / delta).
inline double epsilon_radius(double p_bar, double log_term, long n) {
  double d = double(std::max<long>(1, n - 1));
  return 2.0 * std::sqrt(p_bar * log_term / d) + 14.0 * log_term / (3.0 * d);
}

// Empirical transition plus per-edge radius; defines the transition
// uncertainty set for one epoch. Rows of unvisited pairs default to uniform
// (their radius makes the box vacuous anyway), so every row is stochastic.
struct ConfidenceSet {
  TopologyPtr topo;
  int epoch = 1;
  std::vector<double> p_bar;  // per edge
  std::vector<double> eps;    // per edge
  double delta = 0.0;
  double log_term = 0.0;

  // Epoch-1 set: all transition functions.
  static ConfidenceSet initial(const TopologyPtr& topo) {
    ConfidenceSet cs;
    cs.topo = topo;
    cs.epoch = 1;
    cs.p_bar = TransitionFn::uniform(topo).p;
    cs.eps.assign(topo->num_edges(), 1.0);
    return cs;
  }

  static ConfidenceSet from_counts(const TopologyPtr& topo, const Counters& counters,
                                   int epoch, long horizon, double delta) {
    ConfidenceSet cs;
    cs.topo = topo;
    cs.epoch = epoch;
    cs.delta = delta;
    // |X| states and the number of distinct action labels enter only through
    // the logarithm.
    cs.log_term = std::log(double(horizon) * double(topo->num_states()) *
                           double(topo->num_action_labels()) / delta);
    cs.p_bar.assign(topo->num_edges(), 0.0);
    cs.eps.assign(topo->num_edges(), 0.0);
    for (PairId p = 0; p < topo->num_pairs(); ++p) {
      long n = counters.pair_epoch_start[p];
      int succ = topo->num_successors(p);
      if (succ == 0) continue;
      for (EdgeId e = topo->pair_edges_begin(p); e < topo->pair_edges_end(p); ++e) {
        cs.p_bar[e] = n > 0 ? double(counters.edge_epoch_start[e]) / double(std::max<long>(1, n))
                            : 1.0 / double(succ);
        cs.eps[e] = epsilon_radius(cs.p_bar[e], cs.log_term, n);
      }
    }
    return cs;
  }

  TransitionBox box() const {
    TransitionBox b(topo);
    for (EdgeId e = 0; e < topo->num_edges(); ++e) {
      b.lo[e] = std::max(0.0, p_bar[e] - eps[e]);
      b.hi[e] = std::min(1.0, p_bar[e] + eps[e]);
    }
    return b;
  }
};

inline ValidityReport validate_occupancy(const OccupancyMeasure& occ, const ConfidenceSet& cs,
                                         double tol) {
  return validate_occupancy(occ, cs.box(), tol);
}

}  // namespace pdp
