#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdp {

using StateId = int;
using ActionId = int;  // global action-label id
using PairId = int;    // (state, action) index
using EdgeId = int;    // (state, action, successor) index

struct Edge {
  StateId from = -1;
  ActionId action = -1;
  StateId to = -1;
  PairId pair = -1;
};

class LayeredTopology;
using TopologyPtr = std::shared_ptr<const LayeredTopology>;

// Loop-free layered state/action structure of an episodic MDP. States are
// partitioned into layers; every edge advances exactly one layer. The first
// and last layers are singletons. States in the last layer carry a single
// synthetic "noop" action with no outgoing edges, so that every vector over
// (state, action) pairs is uniformly indexed across all layers.
//
// Indexing conventions (all dense, fixed at build time):
//   - states are numbered in layer order,
//   - pairs are numbered state-major (pairs of one state are contiguous),
//   - edges are numbered pair-major (edges of one pair are contiguous),
//     which also makes the edges of one layer contiguous.
class LayeredTopology {
 public:
  int num_states() const { return int(state_names_.size()); }
  int num_layers() const { return int(layers_.size()); }
  // Number of layer transitions (= episode length in edges).
  int num_steps() const { return num_layers() - 1; }
  int num_pairs() const { return int(pair_state_.size()); }
  int num_edges() const { return int(edges_.size()); }

  int layer_of(StateId x) const { return layer_of_[x]; }
  const std::vector<StateId>& states_in_layer(int k) const { return layers_[k]; }

  const std::string& state_name(StateId x) const { return state_names_[x]; }
  const std::string& action_name(ActionId a) const { return action_names_[a]; }

  StateId state_id(const std::string& name) const {
    for (StateId x = 0; x < num_states(); ++x)
      if (state_names_[x] == name) return x;
    throw std::invalid_argument("unknown state: " + name);
  }

  // Actions available at a state (global label ids, in registration order).
  const std::vector<ActionId>& actions_of(StateId x) const { return actions_of_[x]; }
  int num_actions_of(StateId x) const { return int(actions_of_[x].size()); }
  // Total number of distinct action labels across the topology.
  int num_action_labels() const { return int(action_names_.size()); }

  PairId pair_id(StateId x, ActionId a) const {
    const auto& acts = actions_of_[x];
    for (std::size_t i = 0; i < acts.size(); ++i)
      if (acts[i] == a) return pair_offset_[x] + int(i);
    throw std::invalid_argument("action not available in state " + state_names_[x]);
  }
  PairId first_pair_of(StateId x) const { return pair_offset_[x]; }
  StateId pair_state(PairId p) const { return pair_state_[p]; }
  ActionId pair_action(PairId p) const { return pair_action_[p]; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }
  EdgeId pair_edges_begin(PairId p) const { return pair_edge_begin_[p]; }
  EdgeId pair_edges_end(PairId p) const { return pair_edge_begin_[p + 1]; }
  int num_successors(PairId p) const { return pair_edges_end(p) - pair_edges_begin(p); }

  // Edges whose source lies in layer k (contiguous range).
  EdgeId layer_edges_begin(int k) const { return layer_edge_begin_[k]; }
  EdgeId layer_edges_end(int k) const { return layer_edge_begin_[k + 1]; }

  const std::vector<EdgeId>& in_edges(StateId x) const { return in_edges_[x]; }

  // Edge lookup; returns -1 when the triple is not part of the topology.
  EdgeId find_edge(StateId x, ActionId a, StateId to) const {
    const auto& acts = actions_of_[x];
    for (std::size_t i = 0; i < acts.size(); ++i) {
      if (acts[i] != a) continue;
      PairId p = pair_offset_[x] + int(i);
      for (EdgeId e = pair_edges_begin(p); e < pair_edges_end(p); ++e)
        if (edges_[e].to == to) return e;
    }
    return -1;
  }

  bool same_structure(const LayeredTopology& other) const {
    return state_names_ == other.state_names_ && action_names_ == other.action_names_ &&
           layer_of_ == other.layer_of_ && pair_state_ == other.pair_state_ &&
           edge_keys() == other.edge_keys();
  }

  // One record per edge: "edge <layer> <state> <action> <successor>".
  std::string to_text() const {
    std::ostringstream out;
    for (const Edge& e : edges_)
      out << "edge " << layer_of_[e.from] << ' ' << state_names_[e.from] << ' '
          << action_names_[e.action] << ' ' << state_names_[e.to] << '\n';
    return out.str();
  }

  static TopologyPtr from_text(const std::string& text);

 private:
  friend class TopologyBuilder;

  std::vector<std::vector<int>> edge_keys() const {
    std::vector<std::vector<int>> keys;
    for (const Edge& e : edges_) keys.push_back({e.from, e.action, e.to});
    return keys;
  }

  std::vector<std::string> state_names_;
  std::vector<std::string> action_names_;
  std::vector<int> layer_of_;
  std::vector<std::vector<StateId>> layers_;
  std::vector<std::vector<ActionId>> actions_of_;
  std::vector<int> pair_offset_;       // per state
  std::vector<StateId> pair_state_;    // per pair
  std::vector<ActionId> pair_action_;  // per pair
  std::vector<Edge> edges_;
  std::vector<EdgeId> pair_edge_begin_;   // size num_pairs + 1
  std::vector<EdgeId> layer_edge_begin_;  // size num_layers (last layer -> num_edges)
  std::vector<std::vector<EdgeId>> in_edges_;
};

class TopologyBuilder {
 public:
  TopologyBuilder& add_state(const std::string& name, int layer) {
    if (layer < 0) throw std::invalid_argument("negative layer");
    if (state_index_.count(name)) throw std::invalid_argument("duplicate state " + name);
    state_index_[name] = int(decl_names_.size());
    decl_names_.push_back(name);
    decl_layers_.push_back(layer);
    return *this;
  }

  TopologyBuilder& add_edge(const std::string& from, const std::string& action,
                            const std::string& to) {
    raw_edges_.push_back({from, action, to});
    return *this;
  }

  // Validates the layered structure and freezes all index maps. Any state
  // with no declared action receives the synthetic "noop" action (used for
  // the final layer, which has no outgoing edges).
  TopologyPtr build() const;

 private:
  std::map<std::string, int> state_index_;
  std::vector<std::string> decl_names_;
  std::vector<int> decl_layers_;
  struct RawEdge {
    std::string from, action, to;
  };
  std::vector<RawEdge> raw_edges_;
};

inline TopologyPtr TopologyBuilder::build() const {
  auto topo = std::make_shared<LayeredTopology>();
  const int n = int(decl_names_.size());
  if (n == 0) throw std::invalid_argument("empty topology");

  int n_layers = 0;
  for (int l : decl_layers_) n_layers = std::max(n_layers, l + 1);
  if (n_layers < 2) throw std::invalid_argument("need at least two layers");

  // Renumber states in (layer, declaration) order.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return decl_layers_[a] < decl_layers_[b]; });
  std::vector<int> new_id(n);
  for (int i = 0; i < n; ++i) new_id[order[i]] = i;

  topo->state_names_.resize(n);
  topo->layer_of_.resize(n);
  topo->layers_.assign(n_layers, {});
  for (int i = 0; i < n; ++i) {
    int id = new_id[i];
    topo->state_names_[id] = decl_names_[i];
    topo->layer_of_[id] = decl_layers_[i];
  }
  for (int x = 0; x < n; ++x) topo->layers_[topo->layer_of_[x]].push_back(x);
  for (int k = 0; k < n_layers; ++k)
    if (topo->layers_[k].empty()) throw std::invalid_argument("empty layer");
  if (topo->layers_.front().size() != 1 || topo->layers_.back().size() != 1)
    throw std::invalid_argument("first and last layers must be singletons");

  // Register action labels and per-state action lists from the edges.
  auto action_label = [&](const std::string& name) -> ActionId {
    for (std::size_t i = 0; i < topo->action_names_.size(); ++i)
      if (topo->action_names_[i] == name) return ActionId(i);
    topo->action_names_.push_back(name);
    return ActionId(topo->action_names_.size() - 1);
  };

  topo->actions_of_.assign(n, {});
  struct IndexedEdge {
    StateId from;
    ActionId action;
    StateId to;
  };
  std::vector<IndexedEdge> edges;
  for (const auto& re : raw_edges_) {
    auto itf = state_index_.find(re.from);
    auto itt = state_index_.find(re.to);
    if (itf == state_index_.end() || itt == state_index_.end())
      throw std::invalid_argument("edge references unknown state");
    StateId from = new_id[itf->second], to = new_id[itt->second];
    if (topo->layer_of_[to] != topo->layer_of_[from] + 1)
      throw std::invalid_argument("edge must advance exactly one layer");
    ActionId a = action_label(re.action);
    auto& acts = topo->actions_of_[from];
    if (std::find(acts.begin(), acts.end(), a) == acts.end()) acts.push_back(a);
    edges.push_back({from, a, to});
  }

  // Action-free states (the final layer) get the synthetic noop.
  for (StateId x = 0; x < n; ++x) {
    if (topo->actions_of_[x].empty()) {
      if (topo->layer_of_[x] != n_layers - 1)
        throw std::invalid_argument("non-final state has no outgoing edge: " +
                                    topo->state_names_[x]);
      topo->actions_of_[x].push_back(action_label("noop"));
    }
  }

  // Pair index, state-major.
  topo->pair_offset_.resize(n);
  for (StateId x = 0; x < n; ++x) {
    topo->pair_offset_[x] = int(topo->pair_state_.size());
    for (ActionId a : topo->actions_of_[x]) {
      topo->pair_state_.push_back(x);
      topo->pair_action_.push_back(a);
    }
  }
  const int n_pairs = int(topo->pair_state_.size());

  // Edge index, pair-major with deduplication.
  topo->pair_edge_begin_.assign(n_pairs + 1, 0);
  std::vector<std::vector<StateId>> succ(n_pairs);
  for (const auto& ie : edges) {
    PairId p = topo->pair_id(ie.from, ie.action);
    if (std::find(succ[p].begin(), succ[p].end(), ie.to) == succ[p].end())
      succ[p].push_back(ie.to);
  }
  for (PairId p = 0; p < n_pairs; ++p) {
    topo->pair_edge_begin_[p] = int(topo->edges_.size());
    if (succ[p].empty() && topo->layer_of_[topo->pair_state_[p]] != n_layers - 1)
      throw std::invalid_argument("action without outgoing edge at state " +
                                  topo->state_names_[topo->pair_state_[p]]);
    for (StateId to : succ[p])
      topo->edges_.push_back({topo->pair_state_[p], topo->pair_action_[p], to, p});
  }
  topo->pair_edge_begin_[n_pairs] = int(topo->edges_.size());

  topo->layer_edge_begin_.assign(n_layers + 1, 0);
  for (int k = 0; k <= n_layers; ++k) topo->layer_edge_begin_[k] = int(topo->edges_.size());
  for (EdgeId e = 0; e < int(topo->edges_.size()); ++e) {
    int k = topo->layer_of_[topo->edges_[e].from];
    topo->layer_edge_begin_[k] = std::min(topo->layer_edge_begin_[k], e);
  }
  // Make empty trailing layers consistent.
  for (int k = n_layers - 1; k >= 0; --k)
    topo->layer_edge_begin_[k] = std::min(topo->layer_edge_begin_[k], topo->layer_edge_begin_[k + 1]);

  topo->in_edges_.assign(n, {});
  for (EdgeId e = 0; e < int(topo->edges_.size()); ++e)
    topo->in_edges_[topo->edges_[e].to].push_back(e);

  // Reachability: every non-initial state must be enterable.
  for (StateId x = 1; x < n; ++x)
    if (topo->in_edges_[x].empty())
      throw std::invalid_argument("unreachable state " + topo->state_names_[x]);

  return topo;
}

inline TopologyPtr LayeredTopology::from_text(const std::string& text) {
  TopologyBuilder b;
  std::map<std::string, int> seen;  // state -> layer
  struct Rec {
    std::string from, action, to;
  };
  std::vector<Rec> recs;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag != "edge")
      throw std::invalid_argument("topology line " + std::to_string(line_no) +
                                  ": expected 'edge'");
    int layer;
    Rec r;
    if (!(ls >> layer >> r.from >> r.action >> r.to))
      throw std::invalid_argument("topology line " + std::to_string(line_no) + ": malformed");
    auto note = [&](const std::string& s, int k) {
      auto it = seen.find(s);
      if (it == seen.end())
        seen[s] = k;
      else if (it->second != k)
        throw std::invalid_argument("state " + s + " assigned to two layers");
    };
    note(r.from, layer);
    note(r.to, layer + 1);
    recs.push_back(r);
  }
  std::vector<std::pair<std::string, int>> states(seen.begin(), seen.end());
  std::stable_sort(states.begin(), states.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [name, layer] : states) b.add_state(name, layer);
  for (const auto& r : recs) b.add_edge(r.from, r.action, r.to);
  return b.build();
}

inline void require_same_topology(const TopologyPtr& a, const TopologyPtr& b) {
  if (a == b) return;
  if (!a || !b || !a->same_structure(*b))
    throw std::invalid_argument("objects belong to different topologies");
}

}  // namespace pdp
