#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pdp/occupancy.hpp"
#include "pdp/pricing_env.hpp"
#include "pdp/rng.hpp"
#include "pdp/topology.hpp"

namespace testutil {

using namespace pdp;

// Small random layered topology: 2-4 layers, up to three states per middle
// layer, up to two actions per state, random edge subsets (at least one per
// action, full reachability guaranteed by construction).
inline TopologyPtr random_topology(Rng& rng, int max_layers = 4) {
  int n_layers = 2 + int(rng.uniform() * double(max_layers - 1));
  std::vector<int> width(n_layers, 1);
  for (int k = 1; k + 1 < n_layers; ++k) width[k] = 1 + int(rng.uniform() * 3.0);

  TopologyBuilder b;
  std::vector<std::vector<std::string>> names(n_layers);
  for (int k = 0; k < n_layers; ++k) {
    for (int i = 0; i < width[k]; ++i) {
      std::string nm = "s" + std::to_string(k) + "_" + std::to_string(i);
      names[k].push_back(nm);
      b.add_state(nm, k);
    }
  }
  for (int k = 0; k + 1 < n_layers; ++k) {
    std::vector<bool> entered(width[k + 1], false);
    for (int i = 0; i < width[k]; ++i) {
      int n_actions = 1 + (rng.uniform() < 0.5 ? 1 : 0);
      for (int a = 0; a < n_actions; ++a) {
        std::string act = "a" + std::to_string(a);
        bool any = false;
        for (int j = 0; j < width[k + 1]; ++j) {
          if (rng.uniform() < 0.6) {
            b.add_edge(names[k][i], act, names[k + 1][j]);
            entered[j] = true;
            any = true;
          }
        }
        if (!any) {
          int j = int(rng.uniform() * width[k + 1]);
          b.add_edge(names[k][i], act, names[k + 1][j]);
          entered[j] = true;
        }
      }
    }
    // Guarantee reachability of every next-layer state.
    for (int j = 0; j < width[k + 1]; ++j)
      if (!entered[j]) b.add_edge(names[k][0], "a0", names[k + 1][j]);
  }
  return b.build();
}

inline TransitionFn random_transition(const TopologyPtr& topo, Rng& rng) {
  TransitionFn P(topo);
  for (PairId p = 0; p < topo->num_pairs(); ++p) {
    int n = topo->num_successors(p);
    if (n == 0) continue;
    double sum = 0.0;
    for (EdgeId e = topo->pair_edges_begin(p); e < topo->pair_edges_end(p); ++e) {
      P.p[e] = 0.05 + rng.uniform();
      sum += P.p[e];
    }
    for (EdgeId e = topo->pair_edges_begin(p); e < topo->pair_edges_end(p); ++e) P.p[e] /= sum;
  }
  return P;
}

inline Policy random_policy(const TopologyPtr& topo, Rng& rng, double floor = 0.02) {
  Policy pol(topo);
  for (StateId x = 0; x < topo->num_states(); ++x) {
    int n = topo->num_actions_of(x);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      pol.pi[topo->first_pair_of(x) + i] = floor + rng.uniform();
      sum += pol.pi[topo->first_pair_of(x) + i];
    }
    for (int i = 0; i < n; ++i) pol.pi[topo->first_pair_of(x) + i] /= sum;
  }
  return pol;
}

// Follows a trajectory of (P, pi) and counts edge visits; the Monte-Carlo
// oracle for occupancy_from.
inline std::vector<double> monte_carlo_edge_frequency(const TransitionFn& P, const Policy& pi,
                                                      long episodes, Rng& rng) {
  const auto& topo = *P.topo;
  std::vector<double> freq(topo.num_edges(), 0.0);
  for (long ep = 0; ep < episodes; ++ep) {
    StateId x = topo.states_in_layer(0).front();
    for (int k = 0; k + 1 < topo.num_layers(); ++k) {
      std::vector<double> wa(topo.num_actions_of(x));
      for (std::size_t i = 0; i < wa.size(); ++i)
        wa[i] = pi.pi[topo.first_pair_of(x) + int(i)];
      int i = rng.categorical(wa);
      PairId p = topo.first_pair_of(x) + i;
      std::vector<double> we;
      for (EdgeId e = topo.pair_edges_begin(p); e < topo.pair_edges_end(p); ++e)
        we.push_back(P.p[e]);
      int j = rng.categorical(we);
      EdgeId e = topo.pair_edges_begin(p) + j;
      freq[e] += 1.0;
      x = topo.edge(e).to;
    }
  }
  for (auto& f : freq) f /= double(episodes);
  return freq;
}

inline PricingParams default_params() {
  PricingParams par;
  par.prices_main = {0.4, 0.9};
  par.conv_main = {0.5, 0.3};
  par.stay_prob = {0.6, 0.5};
  par.prices_anc = {0.4, 0.7};
  par.conv_anc = {0.45, 0.25};
  par.continue_prob = {0.55, 0.4};
  par.bonus = 0.05;
  par.tau = 0.4;
  return par;
}

}  // namespace testutil
