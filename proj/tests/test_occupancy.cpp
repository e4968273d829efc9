#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

#include "pdp/occupancy.hpp"
#include "pdp/pricing_env.hpp"

using namespace pdp;
using namespace testutil;

namespace {

TopologyPtr tiny_chain() {
  // One decision state with two actions into a single middle state.
  TopologyBuilder b;
  b.add_state("s", 0).add_state("m", 1).add_state("t", 2);
  b.add_edge("s", "a", "m").add_edge("s", "b", "m");
  b.add_edge("m", "noop", "t");
  return b.build();
}

}  // namespace

TEST_CASE("deterministic transition and policy give the indicator occupancy") {
  auto topo = tiny_chain();
  TransitionFn P = TransitionFn::uniform(topo);
  Policy pi(topo);
  StateId s = topo->state_id("s"), m = topo->state_id("m");
  pi.pi[topo->first_pair_of(s)] = 1.0;      // action a with certainty
  pi.pi[topo->first_pair_of(s) + 1] = 0.0;
  pi.pi[topo->first_pair_of(m)] = 1.0;
  auto occ = occupancy_from(P, pi);
  CHECK(occ.q[topo->find_edge(s, topo->actions_of(s)[0], m)] == doctest::Approx(1.0));
  CHECK(occ.q[topo->find_edge(s, topo->actions_of(s)[1], m)] == doctest::Approx(0.0));
}

TEST_CASE("uniform two-action policy splits mass evenly") {
  auto topo = tiny_chain();
  TransitionFn P = TransitionFn::uniform(topo);
  Policy pi = Policy::uniform(topo);
  auto occ = occupancy_from(P, pi);
  StateId s = topo->state_id("s");
  CHECK(occ.q[topo->pair_edges_begin(topo->first_pair_of(s))] == doctest::Approx(0.5));
  CHECK(occ.q[topo->pair_edges_begin(topo->first_pair_of(s) + 1)] == doctest::Approx(0.5));
}

TEST_CASE("forward-DP occupancy matches Monte-Carlo frequencies on the pricing topology") {
  auto topo = make_pricing_topology(2, 2);
  Rng rng(12345);
  TransitionFn P = random_transition(topo, rng);
  Policy pi = random_policy(topo, rng);
  auto occ = occupancy_from(P, pi);

  const long episodes = 1000000;
  Rng sim(999);
  auto freq = monte_carlo_edge_frequency(P, pi, episodes, sim);
  for (EdgeId e = 0; e < topo->num_edges(); ++e) {
    double p = occ.q[e];
    double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / double(episodes));
    CHECK(std::fabs(freq[e] - p) <= 3.0 * se + 1e-9);
  }
}

TEST_CASE("occupancy_from output validates against its transition") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto topo = random_topology(rng);
    TransitionFn P = random_transition(topo, rng);
    Policy pi = random_policy(topo, rng);
    auto occ = occupancy_from(P, pi);
    auto rep = validate_occupancy(occ, P, 1e-9);
    CHECK(rep.valid);
  }
}

TEST_CASE("validate_occupancy reports constructed violations") {
  auto topo = tiny_chain();
  TransitionFn P = TransitionFn::uniform(topo);
  Policy pi = Policy::uniform(topo);
  auto occ = occupancy_from(P, pi);

  SUBCASE("layer mass deficit") {
    for (auto& v : occ.q) v *= 0.9;
    occ.refresh_marginals();
    auto rep = validate_occupancy(occ, P, 1e-9);
    CHECK(!rep.valid);
    bool found = false;
    for (const auto& f : rep.violated)
      if (f.condition == ValidityCondition::layer_mass &&
          std::fabs(f.residual - 0.1) < 1e-12)
        found = true;
    CHECK(found);
  }

  SUBCASE("transition mismatch against a zero-width box around another transition") {
    TransitionBox box(topo);
    StateId s = topo->state_id("s");
    EdgeId e0 = topo->pair_edges_begin(topo->first_pair_of(s));
    // Box pins the first action's row to an impossible split.
    box.lo[e0] = 0.7;
    box.hi[e0] = 0.7;
    auto occ2 = occupancy_from(P, pi);
    // Induced transition on the single-successor row is 1, not 0.7.
    auto rep = validate_occupancy(occ2, box, 1e-9);
    CHECK(!rep.valid);
    CHECK(rep.violated.front().condition == ValidityCondition::transition_match);
  }
}

TEST_CASE("induced policy and transition round-trip under full support") {
  Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    auto topo = random_topology(rng);
    TransitionFn P = random_transition(topo, rng);
    Policy pi = random_policy(topo, rng);
    auto occ = occupancy_from(P, pi);
    Policy back = induced_policy(occ);
    TransitionFn Pback = induced_transition(occ);
    for (PairId p = 0; p < topo->num_pairs(); ++p) {
      StateId x = topo->pair_state(p);
      if (occ.state_mass[x] > 1e-9 && topo->num_successors(p) > 0)
        CHECK(back.pi[p] == doctest::Approx(pi.pi[p]).epsilon(1e-12));
    }
    for (EdgeId e = 0; e < topo->num_edges(); ++e)
      if (occ.pair_mass[topo->edge(e).pair] > 1e-9)
        CHECK(Pback.p[e] == doctest::Approx(P.p[e]).epsilon(1e-12));
  }
}

TEST_CASE("zero-mass fallbacks are uniform") {
  auto topo = tiny_chain();
  OccupancyMeasure occ(topo);  // all zero
  occ.refresh_marginals();
  Policy pol = induced_policy(occ);
  StateId s = topo->state_id("s");
  CHECK(pol.pi[topo->first_pair_of(s)] == doctest::Approx(0.5));
  CHECK(pol.pi[topo->first_pair_of(s) + 1] == doctest::Approx(0.5));
  TransitionFn f = induced_transition(occ);
  CHECK(f.p[topo->pair_edges_begin(topo->first_pair_of(s))] == doctest::Approx(1.0));
}

TEST_CASE("expected_value sums v(x,a) q(x,a) including the terminal layer") {
  auto topo = tiny_chain();
  auto occ = occupancy_from(TransitionFn::uniform(topo), Policy::uniform(topo));
  std::vector<double> ones(topo->num_pairs(), 1.0);
  // Three layers, unit mass each (terminal included).
  CHECK(expected_value(occ, ones) == doctest::Approx(3.0));
  std::vector<double> zeros(topo->num_pairs(), 0.0);
  CHECK(expected_value(occ, zeros) == doctest::Approx(0.0));

  // Linearity and agreement with a naive loop.
  Rng rng(5);
  std::vector<double> v(topo->num_pairs()), w(topo->num_pairs());
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  double naive = 0.0;
  for (PairId p = 0; p < topo->num_pairs(); ++p) naive += v[p] * occ.pair_mass[p];
  CHECK(expected_value(occ, v) == doctest::Approx(naive).epsilon(1e-12));
  std::vector<double> combo(topo->num_pairs());
  for (PairId p = 0; p < topo->num_pairs(); ++p) combo[p] = 2.5 * v[p] + w[p];
  CHECK(expected_value(occ, combo) ==
        doctest::Approx(2.5 * expected_value(occ, v) + expected_value(occ, w)).epsilon(1e-12));
}

TEST_CASE("expected_value rejects mismatched vectors") {
  auto topo = tiny_chain();
  auto occ = occupancy_from(TransitionFn::uniform(topo), Policy::uniform(topo));
  std::vector<double> bad(topo->num_pairs() + 1, 0.0);
  CHECK_THROWS_AS(expected_value(occ, bad), std::invalid_argument);
}

TEST_CASE("occupancy_from rejects mismatched topologies") {
  auto t1 = tiny_chain();
  auto t2 = make_pricing_topology(2, 2);
  TransitionFn P = TransitionFn::uniform(t1);
  Policy pi = Policy::uniform(t2);
  CHECK_THROWS_AS(occupancy_from(P, pi), std::invalid_argument);
}
