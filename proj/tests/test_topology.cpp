#include "doctest.h"

#include "pdp/pricing_env.hpp"
#include "pdp/topology.hpp"

using namespace pdp;

TEST_CASE("pricing topology has the expected layered structure") {
  auto topo = make_pricing_topology(2, 2);
  CHECK(topo->num_states() == 7);
  CHECK(topo->num_layers() == 4);
  CHECK(topo->num_steps() == 3);
  CHECK(topo->states_in_layer(0).size() == 1);
  CHECK(topo->states_in_layer(1).size() == 3);
  CHECK(topo->states_in_layer(2).size() == 2);
  CHECK(topo->states_in_layer(3).size() == 1);
  // 2 main prices * 3 successors + 2 anc * (1 + 2) + three noop edges.
  CHECK(topo->num_edges() == 15);
  // x0:2, x1:2, x2:2, x3..x6 one noop each.
  CHECK(topo->num_pairs() == 10);

  StateId x6 = topo->state_id("x6");
  CHECK(topo->num_actions_of(x6) == 1);
  CHECK(topo->action_name(topo->actions_of(x6)[0]) == "noop");
  CHECK(topo->num_successors(topo->first_pair_of(x6)) == 0);
}

TEST_CASE("edges of one layer are contiguous and ordered") {
  auto topo = make_pricing_topology(2, 2);
  for (int k = 0; k < topo->num_steps(); ++k) {
    for (EdgeId e = topo->layer_edges_begin(k); e < topo->layer_edges_end(k); ++e)
      CHECK(topo->layer_of(topo->edge(e).from) == k);
  }
  CHECK(topo->layer_edges_begin(0) == 0);
  CHECK(topo->layer_edges_end(topo->num_steps() - 1) == topo->num_edges());
}

TEST_CASE("builder rejects malformed structures") {
  SUBCASE("layer-skipping edge") {
    TopologyBuilder b;
    b.add_state("a", 0).add_state("b", 1).add_state("c", 2);
    b.add_edge("a", "go", "c");
    CHECK_THROWS_AS(b.build(), std::invalid_argument);
  }
  SUBCASE("non-singleton first layer") {
    TopologyBuilder b;
    b.add_state("a", 0).add_state("a2", 0).add_state("b", 1);
    b.add_edge("a", "go", "b").add_edge("a2", "go", "b");
    CHECK_THROWS_AS(b.build(), std::invalid_argument);
  }
  SUBCASE("dead-end interior state") {
    TopologyBuilder b;
    b.add_state("a", 0).add_state("b", 1).add_state("dead", 1).add_state("c", 2);
    b.add_edge("a", "go", "b").add_edge("a", "go", "dead").add_edge("b", "go", "c");
    CHECK_THROWS_AS(b.build(), std::invalid_argument);
  }
}

TEST_CASE("topology text round trip preserves structure") {
  auto topo = make_pricing_topology(2, 2);
  std::string text = topo->to_text();
  auto back = LayeredTopology::from_text(text);
  CHECK(topo->same_structure(*back));
  CHECK(back->to_text() == text);
}
