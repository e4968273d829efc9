#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pdp/confidence.hpp"
#include "pdp/occupancy.hpp"
#include "pdp/omd.hpp"
#include "pdp/pricing_env.hpp"
#include "pdp/topology.hpp"
#include "pdp/uob.hpp"

namespace pdp {

// States whose action distributions must coincide in the played policy
// because the site cannot tell them apart at decision time. alpha weighs the
// two induced rows when they are merged.
struct MergeSpec {
  StateId entry;   // x0: its last played action selects the alpha estimate
  StateId bought;  // x1
  StateId browsed; // x2
};

enum class AlphaMode { dynamic, fixed };

struct LearnerConfig {
  long horizon = 1;              // T
  double eta = 0.0;              // 0 -> default sqrt(ln(#pairs) / T)
  double delta = 0.01;           // confidence parameter
  AlphaMode alpha_mode = AlphaMode::dynamic;
  double alpha_fixed = 0.5;
  std::optional<MergeSpec> merge;

  double resolved_eta(const TopologyPtr& topo) const {
    if (eta > 0.0) return eta;
    return std::sqrt(std::log(double(topo->num_pairs())) / double(horizon));
  }
};

// Loss at the visited pairs: constraint value weighted by the dual variable
// minus the reward. Unvisited pairs carry no value.
inline std::vector<double> compose_loss(const TopologyPtr& topo, const EpisodeOutcome& outcome,
                                        double lambda) {
  std::vector<double> loss(topo->num_pairs(), 0.0);
  for (std::size_t k = 0; k < outcome.visited.size(); ++k)
    loss[outcome.visited[k]] = outcome.constraints[k] * lambda - outcome.rewards[k];
  return loss;
}

// Importance-weighted optimistic estimator: loss over (upper occupancy bound
// + eta) at visited pairs, zero elsewhere.
inline std::vector<double> estimate_loss(const TopologyPtr& topo,
                                         const std::vector<double>& loss,
                                         const std::vector<double>& uob,
                                         const std::vector<PairId>& visited, double eta) {
  std::vector<double> est(topo->num_pairs(), 0.0);
  for (PairId p : visited) est[p] = loss[p] / (uob[p] + eta);
  return est;
}

// Projected gradient ascent step on the dual variable; the gradient is the
// realized constraint value weighted by the learner's occupancy at the
// visited pairs. Clips at zero.
inline double dual_update(double lambda, const EpisodeOutcome& outcome,
                          const OccupancyMeasure& q_hat, double eta) {
  double grad = 0.0;
  for (std::size_t k = 0; k < outcome.visited.size(); ++k)
    grad += outcome.constraints[k] * q_hat.pair_mass[outcome.visited[k]];
  return std::max(0.0, lambda + eta * grad);
}

// Convex-combination weight for the merged ancillary rows: the estimated
// likelihood that the entry state's last action led to the bought page
// rather than the browsed one. Falls back to 1/2 before any data.
inline double merge_alpha(const ConfidenceSet& conf, const MergeSpec& merge,
                          ActionId entry_action) {
  const auto& topo = *conf.topo;
  EdgeId to_bought = topo.find_edge(merge.entry, entry_action, merge.bought);
  EdgeId to_browsed = topo.find_edge(merge.entry, entry_action, merge.browsed);
  double p1 = to_bought >= 0 ? conf.p_bar[to_bought] : 0.0;
  double p2 = to_browsed >= 0 ? conf.p_bar[to_browsed] : 0.0;
  if (p1 + p2 <= 0.0) return 0.5;
  return p1 / (p1 + p2);
}

// Induces the policy from an occupancy estimate and, when a merge spec is
// present, replaces both ancillary rows by their alpha-weighted combination.
inline Policy extract_policy(const OccupancyMeasure& q_hat, const ConfidenceSet& conf,
                             const std::optional<MergeSpec>& merge, AlphaMode mode,
                             double alpha_fixed, ActionId last_entry_action) {
  Policy pol = induced_policy(q_hat);
  if (!merge) return pol;
  const auto& topo = *q_hat.topo;
  double alpha = mode == AlphaMode::fixed
                     ? alpha_fixed
                     : merge_alpha(conf, *merge, last_entry_action);
  int n = topo.num_actions_of(merge->bought);
  for (int j = 0; j < n; ++j) {
    PairId p1 = topo.first_pair_of(merge->bought) + j;
    PairId p2 = topo.first_pair_of(merge->browsed) + j;
    double mixed = alpha * pol.pi[p1] + (1.0 - alpha) * pol.pi[p2];
    pol.pi[p1] = mixed;
    pol.pi[p2] = mixed;
  }
  return pol;
}

struct LearnerTelemetry {
  long t = 0;
  double lambda = 0.0;
  int epoch = 1;
  double mass_residual = 0.0;  // worst per-layer mass deviation of q_hat
};

// Primal-dual online learner for the constrained loop-free MDP. Runs mirror
// descent on the occupancy measure inside epoch-frozen transition confidence
// sets, gradient ascent on the dual variable, and plays the merged policy
// induced by the occupancy iterate.
class PdDpLearner {
 public:
  PdDpLearner(TopologyPtr topo, LearnerConfig cfg)
      : topo_(std::move(topo)),
        cfg_(cfg),
        eta_(cfg.resolved_eta(topo_)),
        q_hat_(topo_),
        lambda_(0.0),
        counters_(topo_),
        conf_(ConfidenceSet::initial(topo_)),
        box_(conf_.box()),
        t_(0),
        last_entry_action_(first_entry_action()) {
    if (cfg_.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (cfg_.delta <= 0.0 || cfg_.delta >= 1.0)
      throw std::invalid_argument("delta must lie in (0,1)");
    if (cfg_.eta < 0.0) throw std::invalid_argument("eta must be positive");
    // Uniform initialization per edge over layer size, action count of the
    // source, and next layer size. Not a valid occupancy in general; the
    // first projection restores validity.
    const auto& T = *topo_;
    for (EdgeId e = 0; e < T.num_edges(); ++e) {
      const Edge& ed = T.edge(e);
      int k = T.layer_of(ed.from);
      double denom = double(T.states_in_layer(k).size()) *
                     double(T.num_actions_of(ed.from)) *
                     double(T.states_in_layer(k + 1).size());
      q_hat_.q[e] = 1.0 / denom;
    }
    q_hat_.refresh_marginals();
    policy_ = extract_policy(q_hat_, conf_, cfg_.merge, cfg_.alpha_mode, cfg_.alpha_fixed,
                             last_entry_action_);
  }

  const Policy& policy() const { return policy_; }
  const OccupancyMeasure& occupancy_estimate() const { return q_hat_; }
  const ConfidenceSet& confidence() const { return conf_; }
  const Counters& counters() const { return counters_; }
  double lambda() const { return lambda_; }
  double eta() const { return eta_; }
  int epoch() const { return conf_.epoch; }
  long round() const { return t_; }

  LearnerTelemetry telemetry() const {
    LearnerTelemetry tel;
    tel.t = t_;
    tel.lambda = lambda_;
    tel.epoch = conf_.epoch;
    const auto& T = *topo_;
    for (int k = 0; k < T.num_steps(); ++k) {
      double mass = 0.0;
      for (EdgeId e = T.layer_edges_begin(k); e < T.layer_edges_end(k); ++e)
        mass += q_hat_.q[e];
      tel.mass_residual = std::max(tel.mass_residual, std::fabs(mass - 1.0));
    }
    return tel;
  }

  // One full iteration: loss composition, upper occupancy bounds, loss
  // estimation, counter/epoch update, occupancy mirror step, dual step, and
  // policy extraction, in that order.
  void step(const EpisodeOutcome& outcome) { step_impl(outcome, policy_); }

  // Replays outcomes collected under the policy frozen at batch start; each
  // replayed update builds its estimator with that frozen policy.
  void batch_step_delayed(std::span<const EpisodeOutcome> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("empty batch");
    Policy frozen = policy_;
    for (const auto& outcome : outcomes) step_impl(outcome, frozen);
  }

  // Registers all trajectories of the batch in the counters, then performs a
  // single primal and dual update from the per-pair means of the realized
  // rewards and constraints (means over the episodes that visited the pair).
  void batch_step_mean(std::span<const EpisodeOutcome> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("empty batch");
    const auto& T = *topo_;

    std::vector<double> reward_sum(T.num_pairs(), 0.0), constraint_sum(T.num_pairs(), 0.0);
    std::vector<int> visits(T.num_pairs(), 0);
    for (const auto& outcome : outcomes) {
      counters_.record(outcome.visited, outcome.traversed);
      for (std::size_t k = 0; k < outcome.visited.size(); ++k) {
        PairId p = outcome.visited[k];
        reward_sum[p] += outcome.rewards[k];
        constraint_sum[p] += outcome.constraints[k];
        ++visits[p];
      }
    }
    std::vector<PairId> visited;
    for (PairId p = 0; p < T.num_pairs(); ++p)
      if (visits[p] > 0) visited.push_back(p);
    if (counters_.doubling_reached(visited)) advance_epoch();

    std::vector<double> loss(T.num_pairs(), 0.0), uob(T.num_pairs(), 0.0);
    double dual_grad = 0.0;
    for (PairId p : visited) {
      double mean_r = reward_sum[p] / double(visits[p]);
      double mean_g = constraint_sum[p] / double(visits[p]);
      loss[p] = mean_g * lambda_ - mean_r;
      uob[p] = comp_uob(policy_, p, box_);
      dual_grad += mean_g * q_hat_.pair_mass[p];
    }
    std::vector<double> est = estimate_loss(topo_, loss, uob, visited, eta_);

    q_hat_ = omd_update(q_hat_, est, eta_, box_, &ws_);
    lambda_ = std::max(0.0, lambda_ + eta_ * dual_grad);
    last_entry_action_ = entry_action_of(outcomes.back());
    policy_ = extract_policy(q_hat_, conf_, cfg_.merge, cfg_.alpha_mode, cfg_.alpha_fixed,
                             last_entry_action_);
    t_ += long(outcomes.size());
  }

 private:
  ActionId first_entry_action() const {
    StateId entry = cfg_.merge ? cfg_.merge->entry : topo_->states_in_layer(0).front();
    return topo_->actions_of(entry).front();
  }

  ActionId entry_action_of(const EpisodeOutcome& outcome) const {
    return topo_->pair_action(outcome.visited.front());
  }

  void advance_epoch() {
    counters_.snapshot();
    conf_ = ConfidenceSet::from_counts(topo_, counters_, conf_.epoch + 1, cfg_.horizon,
                                       cfg_.delta);
    box_ = conf_.box();
  }

  void step_impl(const EpisodeOutcome& outcome, const Policy& estimator_policy) {
    const auto& T = *topo_;
    std::vector<double> loss = compose_loss(topo_, outcome, lambda_);
    std::vector<double> uob(T.num_pairs(), 0.0);
    for (PairId p : outcome.visited) uob[p] = comp_uob(estimator_policy, p, box_);
    std::vector<double> est = estimate_loss(topo_, loss, uob, outcome.visited, eta_);

    counters_.record(outcome.visited, outcome.traversed);
    if (counters_.doubling_reached(outcome.visited)) advance_epoch();

    double next_lambda = dual_update(lambda_, outcome, q_hat_, eta_);
    q_hat_ = omd_update(q_hat_, est, eta_, box_, &ws_);
    lambda_ = next_lambda;
    last_entry_action_ = entry_action_of(outcome);
    policy_ = extract_policy(q_hat_, conf_, cfg_.merge, cfg_.alpha_mode, cfg_.alpha_fixed,
                             last_entry_action_);
    ++t_;
  }

  TopologyPtr topo_;
  LearnerConfig cfg_;
  double eta_;
  OccupancyMeasure q_hat_;
  double lambda_;
  Counters counters_;
  ConfidenceSet conf_;
  TransitionBox box_;
  Policy policy_;
  long t_;
  ActionId last_entry_action_;
  KlProjectionWorkspace ws_;
};

}  // namespace pdp
