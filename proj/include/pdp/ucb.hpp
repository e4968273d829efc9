#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pdp/occupancy.hpp"
#include "pdp/pricing_env.hpp"
#include "pdp/topology.hpp"

namespace pdp {

// Per-decision-state UCB1 instance: pull counts, empirical means, and the
// standard sqrt(2 ln t / n) index with a configurable exploration constant.
struct UcbState {
  std::vector<long> pulls;
  std::vector<double> mean;
  long total_pulls = 0;
  double exploration_c = 1.0;

  explicit UcbState(int arms, double c = 1.0)
      : pulls(arms, 0), mean(arms, 0.0), exploration_c(c) {}

  // Unpulled arms first (lowest index among them); ties broken by the lowest
  // arm index.
  int select() const {
    for (std::size_t a = 0; a < pulls.size(); ++a)
      if (pulls[a] == 0) return int(a);
    int best = 0;
    double best_index = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < pulls.size(); ++a) {
      double bonus = exploration_c * std::sqrt(2.0 * std::log(double(total_pulls)) /
                                               double(pulls[a]));
      double index = mean[a] + bonus;
      if (index > best_index + 1e-15) {
        best_index = index;
        best = int(a);
      }
    }
    return best;
  }

  void update(int arm, double reward) {
    if (reward < 0.0 || reward > 1.0)
      throw std::invalid_argument("ucb reward outside [0,1]");
    ++pulls[arm];
    ++total_pulls;
    mean[arm] += (reward - mean[arm]) / double(pulls[arm]);
  }
};

// Myopic benchmark on the pricing MDP: one UCB instance at the entry state
// over main prices, one shared instance over ancillary prices for the two
// indistinguishable ancillary pages. Each instance sees only the realized
// reward of its own state.
class UcbPricingAgent {
 public:
  UcbPricingAgent(TopologyPtr topo, double exploration_c = 1.0)
      : topo_(std::move(topo)),
        x0_(topo_->state_id("x0")),
        x1_(topo_->state_id("x1")),
        x2_(topo_->state_id("x2")),
        main_(topo_->num_actions_of(x0_), exploration_c),
        anc_(topo_->num_actions_of(x1_), exploration_c) {}

  // Deterministic merged policy from the current indices.
  Policy policy() const {
    Policy pol(topo_);
    int a_main = main_.select();
    int a_anc = anc_.select();
    for (StateId x = 0; x < topo_->num_states(); ++x) {
      int pick = 0;
      if (x == x0_)
        pick = a_main;
      else if (x == x1_ || x == x2_)
        pick = a_anc;
      pol.pi[topo_->first_pair_of(x) + pick] = 1.0;
    }
    return pol;
  }

  void observe(const EpisodeOutcome& outcome) {
    for (std::size_t k = 0; k < outcome.visited.size(); ++k) {
      StateId x = topo_->pair_state(outcome.visited[k]);
      PairId p = outcome.visited[k];
      int local = p - topo_->first_pair_of(x);
      if (x == x0_)
        main_.update(local, outcome.rewards[k]);
      else if (x == x1_ || x == x2_)
        anc_.update(local, outcome.rewards[k]);
    }
  }

  const UcbState& main_state() const { return main_; }
  const UcbState& ancillary_state() const { return anc_; }

 private:
  TopologyPtr topo_;
  StateId x0_, x1_, x2_;
  UcbState main_, anc_;
};

}  // namespace pdp
