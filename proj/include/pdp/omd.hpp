#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pdp/occupancy.hpp"
#include "pdp/topology.hpp"

namespace pdp {

struct ProjectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KlProjectionOptions {
  double target = 1e-9;    // stop once the KKT residual falls below this
  double accept = 1e-8;    // largest residual tolerated at the sweep cap
  int max_sweeps = 10000;
};

struct KlProjectionStats {
  int sweeps = 0;
  double stationarity = 0.0;
};

// Dual state kept across solves. Reusing the previous round's multipliers as
// the starting point cuts the sweep count sharply when consecutive problems
// are close, which they are along a learning run.
struct KlProjectionWorkspace {
  std::vector<double> offset;   // accumulated dual exponent per edge
  std::vector<double> beta_up;  // upper box multipliers, >= 0
  std::vector<double> beta_lo;  // lower box multipliers, >= 0
  bool ready = false;
};

namespace detail {

constexpr double kLogFloor = -745.0;

inline double safe_exp(double x) { return std::exp(std::min(x, 700.0)); }

// Minimizes the unnormalized KL divergence to the anchor over the polytope
// {unit mass per layer} * {flow conservation} * {per-edge transition box},
// by cyclic exact minimization of the dual: closed-form multiplier steps per
// flow constraint, per layer, and per box face (clamped at zero for the
// inequality faces). The iterate always has the form
//   q = anchor * exp(dual combination),
// so primal stationarity holds by construction and the KKT residual reduces
// to constraint violations plus complementary slackness.
class KlBoxProjector {
 public:
  KlBoxProjector(const TopologyPtr& topo, const std::vector<double>& log_anchor,
                 const TransitionBox& box)
      : topo_(topo), box_(box), logq_(log_anchor), q_(topo->num_edges(), 0.0) {
    const auto& T = *topo_;
    const int E = T.num_edges();
    pruned_.assign(E, false);
    eq_.assign(E, false);
    eq_c_.assign(E, 0.0);
    has_up_.assign(E, false);
    has_lo_.assign(E, false);
    for (EdgeId e = 0; e < E; ++e) {
      double lo = std::max(0.0, box.lo[e]), hi = std::min(1.0, box.hi[e]);
      if (hi <= 1e-15) {
        pruned_[e] = true;
        continue;
      }
      if (hi - lo <= 1e-13) {
        if (hi >= 1.0 - 1e-15) continue;  // ratio 1, no constraint needed
        eq_[e] = true;
        eq_c_[e] = 0.5 * (lo + hi);
        continue;
      }
      has_up_[e] = hi < 1.0 - 1e-15;
      has_lo_[e] = lo > 1e-15;
    }

    for (PairId p = 0; p < T.num_pairs(); ++p) {
      Row row;
      row.pair = p;
      for (EdgeId e = T.pair_edges_begin(p); e < T.pair_edges_end(p); ++e)
        if (!pruned_[e]) row.edges.push_back(e);
      if (int(row.edges.size()) < 2) continue;  // single-successor rows are unconstrained
      bool any = false;
      row.all_equality = true;
      for (EdgeId e : row.edges) {
        if (eq_[e] || has_up_[e] || has_lo_[e]) any = true;
        if (!eq_[e]) row.all_equality = false;
      }
      if (any) rows_.push_back(std::move(row));
    }

    for (int k = 1; k + 1 < T.num_layers(); ++k) {
      for (StateId x : T.states_in_layer(k)) {
        Flow f;
        f.state = x;
        for (int i = 0; i < T.num_actions_of(x); ++i) {
          PairId p = T.first_pair_of(x) + i;
          for (EdgeId e = T.pair_edges_begin(p); e < T.pair_edges_end(p); ++e)
            if (!pruned_[e]) f.out.push_back(e);
        }
        for (EdgeId e : T.in_edges(x))
          if (!pruned_[e]) f.in.push_back(e);
        flows_.push_back(std::move(f));
      }
    }
    for (int k = 0; k < T.num_steps(); ++k) {
      std::vector<EdgeId> layer;
      for (EdgeId e = T.layer_edges_begin(k); e < T.layer_edges_end(k); ++e)
        if (!pruned_[e]) layer.push_back(e);
      layers_.push_back(std::move(layer));
    }
  }

  OccupancyMeasure solve(KlProjectionWorkspace* ws, KlProjectionStats* stats,
                         const KlProjectionOptions& opt) {
    const int E = topo_->num_edges();
    beta_up_.assign(E, 0.0);
    beta_lo_.assign(E, 0.0);
    anchor_ = logq_;
    if (ws && ws->ready && int(ws->offset.size()) == E) {
      for (EdgeId e = 0; e < E; ++e) {
        if (pruned_[e]) continue;
        logq_[e] += ws->offset[e];
        beta_up_[e] = std::max(0.0, ws->beta_up[e]);
        beta_lo_[e] = std::max(0.0, ws->beta_lo[e]);
      }
    }
    for (EdgeId e = 0; e < E; ++e) {
      logq_[e] = std::max(logq_[e], kLogFloor);
      q_[e] = pruned_[e] ? 0.0 : safe_exp(logq_[e]);
    }

    double resid = 0.0;
    int sweeps = 0;
    while (sweeps < opt.max_sweeps) {
      balance_flows();
      enforce_rows();
      normalize_layers();
      ++sweeps;
      resid = stationarity();
      if (resid <= opt.target) break;
    }
    if (resid > opt.accept)
      throw ProjectionError("occupancy projection did not reach stationarity (residual " +
                            std::to_string(resid) + ")");
    if (stats) {
      stats->sweeps = sweeps;
      stats->stationarity = resid;
    }
    if (ws) {
      ws->offset.assign(E, 0.0);
      for (EdgeId e = 0; e < E; ++e)
        if (!pruned_[e]) ws->offset[e] = logq_[e] - anchor_[e];
      ws->beta_up = beta_up_;
      ws->beta_lo = beta_lo_;
      ws->ready = true;
    }

    OccupancyMeasure out(topo_);
    for (EdgeId e = 0; e < E; ++e) out.q[e] = pruned_[e] ? 0.0 : q_[e];
    out.refresh_marginals();
    return out;
  }

 private:
  struct Row {
    PairId pair;
    std::vector<EdgeId> edges;
    bool all_equality = false;
  };
  struct Flow {
    StateId state;
    std::vector<EdgeId> out, in;
  };

  void bump(EdgeId e, double delta) {
    logq_[e] = std::max(logq_[e] + delta, kLogFloor);
    q_[e] = safe_exp(logq_[e]);
  }

  void balance_flows() {
    for (const Flow& f : flows_) {
      double out = 0.0, in = 0.0;
      for (EdgeId e : f.out) out += q_[e];
      for (EdgeId e : f.in) in += q_[e];
      if (out <= 0.0 || in <= 0.0) continue;
      double delta = std::clamp(0.5 * std::log(out / in), -50.0, 50.0);
      if (delta == 0.0) continue;
      for (EdgeId e : f.out) bump(e, -delta);
      for (EdgeId e : f.in) bump(e, delta);
    }
  }

  void enforce_rows() {
    for (const Row& row : rows_) {
      if (row.all_equality) {
        // The whole row is pinned to fixed ratios; reassign them directly
        // while preserving the row total.
        double total = 0.0, csum = 0.0;
        for (EdgeId e : row.edges) {
          total += q_[e];
          csum += eq_c_[e];
        }
        if (total <= 0.0 || csum <= 0.0) continue;
        for (EdgeId e : row.edges) {
          double target = std::max(eq_c_[e] / csum * total, 1e-300);
          logq_[e] = std::log(target);
          q_[e] = target;
        }
        continue;
      }
      for (EdgeId e : row.edges) {
        double rowsum = 0.0;
        for (EdgeId f : row.edges) rowsum += q_[f];
        double a = q_[e], b = rowsum - a;
        if (b <= 0.0 || a <= 0.0) continue;
        if (eq_[e]) {
          double c = eq_c_[e];
          apply_face(row, e, clamp_step(std::log(a * (1.0 - c) / (c * b))), c);
          continue;
        }
        if (has_up_[e]) {
          double hi = std::min(1.0, box_.hi[e]);
          double want = clamp_step(std::log(a * (1.0 - hi) / (hi * b)));
          double nb = std::max(0.0, beta_up_[e] + want);
          double step = nb - beta_up_[e];
          if (step != 0.0) {
            beta_up_[e] = nb;
            apply_face(row, e, step, hi);
            a = q_[e];
            b = 0.0;
            for (EdgeId f : row.edges) b += q_[f];
            b -= a;
            if (b <= 0.0 || a <= 0.0) continue;
          }
        }
        if (has_lo_[e]) {
          double lo = std::max(0.0, box_.lo[e]);
          double want = clamp_step(std::log(lo * b / (a * (1.0 - lo))));
          double nb = std::max(0.0, beta_lo_[e] + want);
          double step = nb - beta_lo_[e];
          if (step != 0.0) {
            beta_lo_[e] = nb;
            apply_face(row, e, -step, lo);
          }
        }
      }
    }
  }

  // Single multiplier steps stay bounded so the recorded duals and the
  // applied exponents never diverge; repeated sweeps cover larger moves.
  static double clamp_step(double step) { return std::clamp(step, -200.0, 200.0); }

  // Multiplier step for the face q_e <= coef * q_row (or the equality face):
  // every edge of the row gains step * coef in the exponent, the owning edge
  // additionally loses step.
  void apply_face(const Row& row, EdgeId e, double step, double coef) {
    for (EdgeId f : row.edges) bump(f, step * coef);
    bump(e, -step);
  }

  void normalize_layers() {
    for (const auto& layer : layers_) {
      double mass = 0.0;
      for (EdgeId e : layer) mass += q_[e];
      if (mass <= 0.0) continue;
      double delta = std::log(mass);
      if (delta == 0.0) continue;
      for (EdgeId e : layer) bump(e, -delta);
    }
  }

  // Projected-gradient residual of the dual: constraint violations on the
  // free multipliers, one-sided violations plus complementary slackness on
  // the clamped box multipliers.
  double stationarity() const {
    double r = 0.0;
    for (const auto& layer : layers_) {
      double mass = 0.0;
      for (EdgeId e : layer) mass += q_[e];
      r = std::max(r, std::fabs(mass - 1.0));
    }
    for (const Flow& f : flows_) {
      double out = 0.0, in = 0.0;
      for (EdgeId e : f.out) out += q_[e];
      for (EdgeId e : f.in) in += q_[e];
      r = std::max(r, std::fabs(out - in));
    }
    for (const Row& row : rows_) {
      double rowsum = 0.0;
      for (EdgeId f : row.edges) rowsum += q_[f];
      for (EdgeId e : row.edges) {
        if (eq_[e]) {
          r = std::max(r, std::fabs(q_[e] - eq_c_[e] * rowsum));
          continue;
        }
        if (has_up_[e]) {
          double slack = std::min(1.0, box_.hi[e]) * rowsum - q_[e];
          r = std::max(r, beta_up_[e] > 0.0 ? std::fabs(slack) : std::max(0.0, -slack));
        }
        if (has_lo_[e]) {
          double slack = q_[e] - std::max(0.0, box_.lo[e]) * rowsum;
          r = std::max(r, beta_lo_[e] > 0.0 ? std::fabs(slack) : std::max(0.0, -slack));
        }
      }
    }
    return r;
  }

  TopologyPtr topo_;
  const TransitionBox& box_;
  std::vector<double> logq_, q_, anchor_;
  std::vector<bool> pruned_, eq_, has_up_, has_lo_;
  std::vector<double> eq_c_;
  std::vector<double> beta_up_, beta_lo_;
  std::vector<Row> rows_;
  std::vector<Flow> flows_;
  std::vector<std::vector<EdgeId>> layers_;
};

}  // namespace detail

// Exact KL projection of exp(log_anchor) onto the occupancy polytope with
// the transition constraint relaxed to the box.
inline OccupancyMeasure kl_project(const TopologyPtr& topo, const std::vector<double>& log_anchor,
                                   const TransitionBox& box,
                                   KlProjectionWorkspace* ws = nullptr,
                                   KlProjectionStats* stats = nullptr,
                                   const KlProjectionOptions& opt = {}) {
  detail::KlBoxProjector proj(topo, log_anchor, box);
  return proj.solve(ws, stats, opt);
}

// Mirror-descent step on the occupancy measure under the unnormalized KL
// geometry: multiplicative update by exp(-eta * loss), then exact projection
// back onto the feasible polytope of the current confidence box.
inline OccupancyMeasure omd_update(const OccupancyMeasure& q_hat,
                                   const std::vector<double>& loss_per_pair, double eta,
                                   const TransitionBox& box,
                                   KlProjectionWorkspace* ws = nullptr,
                                   KlProjectionStats* stats = nullptr,
                                   const KlProjectionOptions& opt = {}) {
  if (eta <= 0.0) throw std::invalid_argument("omd_update: eta must be positive");
  require_same_topology(q_hat.topo, box.topo);
  if (int(loss_per_pair.size()) != q_hat.topo->num_pairs())
    throw std::invalid_argument("omd_update: loss vector does not match pair index");
  const auto& topo = *q_hat.topo;
  std::vector<double> log_anchor(topo.num_edges());
  for (EdgeId e = 0; e < topo.num_edges(); ++e) {
    double base = std::max(q_hat.q[e], 1e-300);
    log_anchor[e] = std::log(base) - eta * loss_per_pair[topo.edge(e).pair];
  }
  return kl_project(q_hat.topo, log_anchor, box, ws, stats, opt);
}

// Objective minimized by omd_update, evaluated over edges; useful for
// independent verification of the solver.
inline double omd_objective(const OccupancyMeasure& q, const OccupancyMeasure& q_hat,
                            const std::vector<double>& loss_per_pair, double eta) {
  const auto& topo = *q.topo;
  double lin = 0.0, kl = 0.0;
  for (EdgeId e = 0; e < topo.num_edges(); ++e) {
    lin += loss_per_pair[topo.edge(e).pair] * q.q[e];
    double ref = std::max(q_hat.q[e], 1e-300);
    if (q.q[e] > 0.0) kl += q.q[e] * std::log(q.q[e] / ref);
    kl -= q.q[e] - ref;
  }
  return lin + kl / eta;
}

}  // namespace pdp
