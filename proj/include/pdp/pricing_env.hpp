#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdp/occupancy.hpp"
#include "pdp/rng.hpp"
#include "pdp/topology.hpp"

namespace pdp {

// Parameters of the two-item pricing MDP. Prices are normalized into (0, 1]
// so realized profits stay in [0, 1]; conversion and continuation entries are
// indexed by the price chosen at the corresponding decision state.
struct PricingParams {
  std::vector<double> prices_main;    // one per main-item price action
  std::vector<double> conv_main;      // purchase probability per main price
  std::vector<double> stay_prob;      // stay-on-site probability given no purchase
  std::vector<double> prices_anc;     // one per ancillary price action
  std::vector<double> conv_anc;       // ancillary purchase probability
  std::vector<double> continue_prob;  // reach payment page from the no-purchase branch
  double bonus = 0.05;                // engagement bonus added at x1, x2, x4
  double tau = 0.0;                   // sales-ratio target

  void check() const {
    auto in01 = [](const std::vector<double>& v) {
      for (double x : v)
        if (x < 0.0 || x > 1.0) return false;
      return true;
    };
    if (prices_main.empty() || prices_anc.empty())
      throw std::invalid_argument("pricing params: need at least one price per item");
    if (conv_main.size() != prices_main.size() || stay_prob.size() != prices_main.size())
      throw std::invalid_argument("pricing params: main-item vectors disagree in length");
    if (conv_anc.size() != prices_anc.size() || continue_prob.size() != prices_anc.size())
      throw std::invalid_argument("pricing params: ancillary vectors disagree in length");
    for (double p : prices_main)
      if (p <= 0.0 || p > 1.0) throw std::invalid_argument("main price outside (0,1]");
    for (double p : prices_anc)
      if (p <= 0.0 || p > 1.0) throw std::invalid_argument("ancillary price outside (0,1]");
    if (!in01(conv_main) || !in01(stay_prob) || !in01(conv_anc) || !in01(continue_prob))
      throw std::invalid_argument("probability parameter outside [0,1]");
    if (bonus < 0.0 || bonus >= 1.0) throw std::invalid_argument("bonus outside [0,1)");
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau outside [0,1]");
    double max_anc = 0.0;
    for (double p : prices_anc) max_anc = std::max(max_anc, p);
    if (bonus + max_anc > 1.0 + 1e-12)
      throw std::invalid_argument("bonus + max ancillary price must stay within [0,1]");
  }
};

inline PricingParams lerp(const PricingParams& a, const PricingParams& b, double w) {
  auto mix = [w](const std::vector<double>& u, const std::vector<double>& v) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = (1.0 - w) * u[i] + w * v[i];
    return out;
  };
  PricingParams r;
  r.prices_main = mix(a.prices_main, b.prices_main);
  r.conv_main = mix(a.conv_main, b.conv_main);
  r.stay_prob = mix(a.stay_prob, b.stay_prob);
  r.prices_anc = mix(a.prices_anc, b.prices_anc);
  r.conv_anc = mix(a.conv_anc, b.conv_anc);
  r.continue_prob = mix(a.continue_prob, b.continue_prob);
  r.bonus = (1.0 - w) * a.bonus + w * b.bonus;
  r.tau = (1.0 - w) * a.tau + w * b.tau;
  return r;
}

// Non-stationarity schedule over episodes 1..T. Abrupt schedules hold each
// phase on an equal share of the horizon; smooth schedules interpolate
// linearly between the first and last parameter set, round by round.
struct Schedule {
  enum class Kind { stationary, abrupt, smooth };
  Kind kind = Kind::stationary;
  std::vector<PricingParams> phases;  // stationary: 1; abrupt: n+1; smooth: {start, end}

  static Schedule stationary(PricingParams p) { return {Kind::stationary, {std::move(p)}}; }
  static Schedule abrupt(std::vector<PricingParams> phases_) {
    if (phases_.size() < 2) throw std::invalid_argument("abrupt schedule needs >= 2 phases");
    return {Kind::abrupt, std::move(phases_)};
  }
  static Schedule smooth(PricingParams start, PricingParams end) {
    return {Kind::smooth, {std::move(start), std::move(end)}};
  }

  int num_changes() const { return kind == Kind::abrupt ? int(phases.size()) - 1 : 0; }

  // First episode index (1-based) of phase j; change points are equally
  // spaced over the horizon. Matches the integer boundaries used by at().
  long change_point(int j, long T) const {
    long n = long(phases.size());
    return 1 + (T * long(j) + n - 1) / n;
  }

  PricingParams at(long t, long T) const {
    if (t < 1 || t > T) throw std::invalid_argument("episode index outside [1, T]");
    switch (kind) {
      case Kind::stationary:
        return phases.front();
      case Kind::abrupt: {
        long n = long(phases.size());
        long idx = ((t - 1) * n) / T;
        return phases[std::min<long>(idx, n - 1)];
      }
      case Kind::smooth: {
        double w = T > 1 ? double(t - 1) / double(T - 1) : 0.0;
        return lerp(phases.front(), phases.back(), w);
      }
    }
    throw std::logic_error("unreachable");
  }

  void check() const {
    if (phases.empty()) throw std::invalid_argument("schedule has no parameter sets");
    for (const auto& p : phases) p.check();
  }
};

// One simulated customer episode: the realized trajectory as (state, action)
// pairs for every layer, edge ids actually traversed, and the realized
// per-pair rewards and constraint values.
struct EpisodeOutcome {
  std::vector<PairId> visited;       // one per layer
  std::vector<EdgeId> traversed;     // one per layer transition
  std::vector<double> rewards;       // aligned with visited
  std::vector<double> constraints;   // aligned with visited
  bool purchase_main = false;
  bool purchase_anc = false;
};

// Schedule-resolved environment truth at one episode: the transition
// function and the mean reward / constraint vectors over pairs.
struct GroundTruth {
  TransitionFn P;
  std::vector<double> mean_reward;      // per pair
  std::vector<double> mean_constraint;  // per pair
};

inline TopologyPtr make_pricing_topology(int n_main, int n_anc) {
  if (n_main < 1 || n_anc < 1) throw std::invalid_argument("need at least one price per item");
  TopologyBuilder b;
  b.add_state("x0", 0);
  b.add_state("x1", 1).add_state("x2", 1).add_state("x3", 1);
  b.add_state("x4", 2).add_state("x5", 2);
  b.add_state("x6", 3);
  for (int i = 0; i < n_main; ++i) {
    std::string a = "m" + std::to_string(i);
    b.add_edge("x0", a, "x1").add_edge("x0", a, "x2").add_edge("x0", a, "x3");
  }
  for (int j = 0; j < n_anc; ++j) {
    std::string a = "a" + std::to_string(j);
    b.add_edge("x1", a, "x4");
    b.add_edge("x2", a, "x4").add_edge("x2", a, "x5");
  }
  b.add_edge("x3", "noop", "x5");
  b.add_edge("x4", "noop", "x6");
  b.add_edge("x5", "noop", "x6");
  return b.build();
}

// Builds the transition function and mean reward/constraint vectors of the
// pricing MDP for one parameter set. Mean rewards: conversion-weighted
// profit at the decision states, the engagement bonus at x1/x2/x4, zero at
// exits. The constraint is tau minus the sale indicator, in expectation
// tau - conv_main, and lives only at x0.
inline GroundTruth build_pricing_mdp(const TopologyPtr& topo, const PricingParams& par) {
  par.check();
  const auto& T = *topo;
  GroundTruth gt;
  gt.P = TransitionFn(topo);
  gt.mean_reward.assign(T.num_pairs(), 0.0);
  gt.mean_constraint.assign(T.num_pairs(), 0.0);

  StateId x0 = T.state_id("x0"), x1 = T.state_id("x1"), x2 = T.state_id("x2"),
          x3 = T.state_id("x3"), x4 = T.state_id("x4"), x5 = T.state_id("x5"),
          x6 = T.state_id("x6");

  auto set_p = [&](StateId x, ActionId a, StateId to, double v) {
    EdgeId e = T.find_edge(x, a, to);
    if (e < 0) throw std::logic_error("missing pricing edge");
    gt.P.p[e] = v;
  };

  const int n_main = int(par.prices_main.size());
  for (int i = 0; i < n_main; ++i) {
    ActionId a = T.actions_of(x0)[i];
    double conv = par.conv_main[i], stay = par.stay_prob[i];
    set_p(x0, a, x1, conv);
    set_p(x0, a, x2, (1.0 - conv) * stay);
    set_p(x0, a, x3, (1.0 - conv) * (1.0 - stay));
    PairId p = T.first_pair_of(x0) + i;
    gt.mean_reward[p] = conv * par.prices_main[i];
    gt.mean_constraint[p] = par.tau - conv;
  }
  const int n_anc = int(par.prices_anc.size());
  for (int j = 0; j < n_anc; ++j) {
    ActionId a = T.actions_of(x1)[j];
    set_p(x1, a, x4, 1.0);
    gt.mean_reward[T.first_pair_of(x1) + j] = par.conv_anc[j] * par.prices_anc[j] + par.bonus;
    ActionId a2 = T.actions_of(x2)[j];
    set_p(x2, a2, x4, par.continue_prob[j]);
    set_p(x2, a2, x5, 1.0 - par.continue_prob[j]);
    gt.mean_reward[T.first_pair_of(x2) + j] = par.bonus;
  }
  set_p(x3, T.actions_of(x3)[0], x5, 1.0);
  set_p(x4, T.actions_of(x4)[0], x6, 1.0);
  set_p(x5, T.actions_of(x5)[0], x6, 1.0);
  gt.mean_reward[T.first_pair_of(x4)] = par.bonus;
  gt.P.check(1e-12);
  return gt;
}

// The complementary-items pricing environment: owns the topology, resolves
// the schedule, and samples customer episodes.
class PricingEnvironment {
 public:
  PricingEnvironment(Schedule schedule, long horizon)
      : schedule_(std::move(schedule)), horizon_(horizon) {
    if (horizon_ < 1) throw std::invalid_argument("horizon must be >= 1");
    schedule_.check();
    const auto& base = schedule_.phases.front();
    for (const auto& ph : schedule_.phases) {
      if (ph.prices_main.size() != base.prices_main.size() ||
          ph.prices_anc.size() != base.prices_anc.size())
        throw std::invalid_argument("schedule phases disagree on action counts");
    }
    topo_ = make_pricing_topology(int(base.prices_main.size()), int(base.prices_anc.size()));
    x0_ = topo_->state_id("x0");
    x1_ = topo_->state_id("x1");
    x2_ = topo_->state_id("x2");
    x3_ = topo_->state_id("x3");
    x4_ = topo_->state_id("x4");
    x5_ = topo_->state_id("x5");
    x6_ = topo_->state_id("x6");
  }

  const TopologyPtr& topology() const { return topo_; }
  long horizon() const { return horizon_; }
  const Schedule& schedule() const { return schedule_; }
  StateId x0() const { return x0_; }
  StateId x1() const { return x1_; }
  StateId x2() const { return x2_; }

  PricingParams params_at(long t) const { return schedule_.at(t, horizon_); }

  // Schedule-resolved means and transition at episode t; pure and repeatable.
  GroundTruth ground_truth(long t) const { return build_pricing_mdp(topo_, params_at(t)); }

  // Mean of the per-episode ground truths over the whole horizon, used as
  // the fixed comparator model under non-stationary schedules.
  GroundTruth horizon_average() const {
    if (schedule_.kind == Schedule::Kind::stationary) return ground_truth(1);
    GroundTruth acc = ground_truth(1);
    if (schedule_.kind == Schedule::Kind::abrupt) {
      // Phase-weighted average; phases are constant in between change points.
      std::vector<double> weight(schedule_.phases.size(), 0.0);
      long n = long(schedule_.phases.size());
      for (int j = 0; j < int(n); ++j) {
        long first = schedule_.change_point(j, horizon_);
        long next = schedule_.change_point(j + 1, horizon_);
        weight[j] = double(std::min(next, horizon_ + 1) - first) / double(horizon_);
      }
      GroundTruth out = acc;
      std::fill(out.P.p.begin(), out.P.p.end(), 0.0);
      std::fill(out.mean_reward.begin(), out.mean_reward.end(), 0.0);
      std::fill(out.mean_constraint.begin(), out.mean_constraint.end(), 0.0);
      for (std::size_t j = 0; j < schedule_.phases.size(); ++j) {
        GroundTruth g = build_pricing_mdp(topo_, schedule_.phases[j]);
        for (std::size_t e = 0; e < g.P.p.size(); ++e) out.P.p[e] += weight[j] * g.P.p[e];
        for (std::size_t p = 0; p < g.mean_reward.size(); ++p) {
          out.mean_reward[p] += weight[j] * g.mean_reward[p];
          out.mean_constraint[p] += weight[j] * g.mean_constraint[p];
        }
      }
      return out;
    }
    // Smooth: average the per-round truths exactly. The means are not linear
    // in the parameters (products of interpolated terms), so sum round by
    // round.
    GroundTruth out = acc;
    std::fill(out.P.p.begin(), out.P.p.end(), 0.0);
    std::fill(out.mean_reward.begin(), out.mean_reward.end(), 0.0);
    std::fill(out.mean_constraint.begin(), out.mean_constraint.end(), 0.0);
    for (long t = 1; t <= horizon_; ++t) {
      GroundTruth g = ground_truth(t);
      for (std::size_t e = 0; e < g.P.p.size(); ++e) out.P.p[e] += g.P.p[e];
      for (std::size_t p = 0; p < g.mean_reward.size(); ++p) {
        out.mean_reward[p] += g.mean_reward[p];
        out.mean_constraint[p] += g.mean_constraint[p];
      }
    }
    double inv = 1.0 / double(horizon_);
    for (auto& v : out.P.p) v *= inv;
    for (auto& v : out.mean_reward) v *= inv;
    for (auto& v : out.mean_constraint) v *= inv;
    return out;
  }

  // Simulates one customer under a merged policy (the x1 and x2 rows must
  // coincide: the site cannot tell the two ancillary pages apart when it
  // picks the price). Rewards and transitions are coupled: the main-item
  // reward is positive exactly when the customer moves to x1.
  EpisodeOutcome sample_episode(const Policy& policy, long t, Rng& rng) const {
    require_same_topology(policy.topo, topo_);
    for (int j = 0; j < topo_->num_actions_of(x1_); ++j) {
      double p1 = policy.pi[topo_->first_pair_of(x1_) + j];
      double p2 = policy.pi[topo_->first_pair_of(x2_) + j];
      if (std::fabs(p1 - p2) > 1e-12)
        throw std::invalid_argument("policy is not merged across the ancillary states");
    }
    PricingParams par = params_at(t);
    EpisodeOutcome out;

    // Layer 0: main price, purchase draw.
    std::vector<double> w0(topo_->num_actions_of(x0_));
    for (std::size_t i = 0; i < w0.size(); ++i) w0[i] = policy.pi[topo_->first_pair_of(x0_) + int(i)];
    int i_main = rng.categorical(w0);
    PairId p0 = topo_->first_pair_of(x0_) + i_main;
    out.purchase_main = rng.bernoulli(par.conv_main[i_main]);
    out.visited.push_back(p0);
    out.rewards.push_back(out.purchase_main ? par.prices_main[i_main] : 0.0);
    out.constraints.push_back(par.tau - (out.purchase_main ? 1.0 : 0.0));

    StateId second;
    if (out.purchase_main) {
      second = x1_;
    } else {
      second = rng.bernoulli(par.stay_prob[i_main]) ? x2_ : x3_;
    }
    out.traversed.push_back(topo_->find_edge(x0_, topo_->actions_of(x0_)[i_main], second));

    // Layer 1.
    StateId third;
    if (second == x1_) {
      std::vector<double> w1(topo_->num_actions_of(x1_));
      for (std::size_t j = 0; j < w1.size(); ++j)
        w1[j] = policy.pi[topo_->first_pair_of(x1_) + int(j)];
      int j_anc = rng.categorical(w1);
      out.purchase_anc = rng.bernoulli(par.conv_anc[j_anc]);
      out.visited.push_back(topo_->first_pair_of(x1_) + j_anc);
      out.rewards.push_back((out.purchase_anc ? par.prices_anc[j_anc] : 0.0) + par.bonus);
      out.constraints.push_back(0.0);
      third = x4_;
      out.traversed.push_back(topo_->find_edge(x1_, topo_->actions_of(x1_)[j_anc], x4_));
    } else if (second == x2_) {
      std::vector<double> w1(topo_->num_actions_of(x2_));
      for (std::size_t j = 0; j < w1.size(); ++j)
        w1[j] = policy.pi[topo_->first_pair_of(x2_) + int(j)];
      int j_anc = rng.categorical(w1);
      out.visited.push_back(topo_->first_pair_of(x2_) + j_anc);
      out.rewards.push_back(par.bonus);
      out.constraints.push_back(0.0);
      third = rng.bernoulli(par.continue_prob[j_anc]) ? x4_ : x5_;
      out.traversed.push_back(topo_->find_edge(x2_, topo_->actions_of(x2_)[j_anc], third));
    } else {
      out.visited.push_back(topo_->first_pair_of(x3_));
      out.rewards.push_back(0.0);
      out.constraints.push_back(0.0);
      third = x5_;
      out.traversed.push_back(topo_->find_edge(x3_, topo_->actions_of(x3_)[0], x5_));
    }

    // Layer 2: payment page or exit, then the common terminal state.
    out.visited.push_back(topo_->first_pair_of(third));
    out.rewards.push_back(third == x4_ ? par.bonus : 0.0);
    out.constraints.push_back(0.0);
    out.traversed.push_back(topo_->find_edge(third, topo_->actions_of(third)[0], x6_));

    out.visited.push_back(topo_->first_pair_of(x6_));
    out.rewards.push_back(0.0);
    out.constraints.push_back(0.0);
    return out;
  }

 private:
  Schedule schedule_;
  long horizon_;
  TopologyPtr topo_;
  StateId x0_, x1_, x2_, x3_, x4_, x5_, x6_;
};

// Sales-ratio target per difficulty level, relative to the achievable
// conversion range of the base parameters: low is satisfied with ample slack
// by any policy, mid binds, high is infeasible. The low target sits at half
// the worst conversion so the dual variable, which moves on realized
// (noisy) constraint values, actually rests at zero there.
inline double difficulty_tau(const PricingParams& base, const std::string& level) {
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (double c : base.conv_main) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
    sum += c;
  }
  double mean = sum / double(base.conv_main.size());
  if (level == "low") return 0.5 * lo;
  if (level == "mid") return mean;
  if (level == "high") return std::min(1.0, 1.1 * hi);
  throw std::invalid_argument("unknown difficulty level: " + level);
}

}  // namespace pdp
