#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <unordered_map>
#include <vector>

#include "edgeshap/common.hpp"
#include "edgeshap/graph.hpp"

namespace edgeshap {

// The pruned computational graph of one target node. Players are the
// directed edges (u -> v) whose message can reach the target within the
// model's receptive field: v lies at directed distance <= num_layers - 1
// from the target (distance measured along message direction). Everything
// outside this set provably cannot change the target's output, so it is
// dropped before any sampling happens.
//
// Local node ids are dense: 0 is always the target, the remaining nodes
// follow in ascending global id. Players are sorted (dst, src) in local
// ids, which puts the 1-hop players (dst == target) in a prefix of length
// one_hop_count; a coalition with an empty prefix cannot influence the
// target at all.
struct CompGraph {
  NodeId target = 0;                    // global id
  int num_layers = 2;
  std::vector<NodeId> local_to_global;  // [0] == target
  std::vector<Edge> players;            // local ids, (dst, src)-sorted
  std::vector<double> frozen_degrees;   // 1 + whole-graph in-degree, per local node
  std::int64_t one_hop_count = 0;

  int num_players() const { return static_cast<int>(players.size()); }
  int num_local_nodes() const { return static_cast<int>(local_to_global.size()); }

  Edge player_global(int i) const {
    return {local_to_global[players[i].src], local_to_global[players[i].dst]};
  }
};

inline CompGraph extract_pruned(const Graph& g, NodeId target, int num_layers) {
  require(target >= 0 && target < g.num_nodes(),
          "extract_pruned: target " + std::to_string(target) + " out of range");
  require(num_layers >= 1, "extract_pruned: num_layers must be >= 1");

  // Directed distance to the target along message direction, BFS over
  // incoming edges, capped at num_layers - 1.
  std::unordered_map<NodeId, int> dist;
  dist[target] = 0;
  std::queue<NodeId> frontier;
  frontier.push(target);
  while (!frontier.empty()) {
    NodeId v = frontier.front();
    frontier.pop();
    int d = dist[v];
    if (d == num_layers - 1) continue;
    for (NodeId u : g.in_neighbors(v))
      if (dist.emplace(u, d + 1).second) frontier.push(u);
  }

  // Every in-edge of a node that can still forward to the target is a
  // player, including edges arriving from outside the ball.
  std::vector<Edge> players_global;
  for (const auto& [v, d] : dist)
    for (NodeId u : g.in_neighbors(v)) players_global.push_back({u, v});

  CompGraph comp;
  comp.target = target;
  comp.num_layers = num_layers;

  std::vector<NodeId> nodes;
  nodes.reserve(players_global.size() * 2 + 1);
  for (const Edge& e : players_global) {
    nodes.push_back(e.src);
    nodes.push_back(e.dst);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::erase(nodes, target);

  comp.local_to_global.reserve(nodes.size() + 1);
  comp.local_to_global.push_back(target);
  comp.local_to_global.insert(comp.local_to_global.end(), nodes.begin(),
                              nodes.end());

  std::unordered_map<NodeId, NodeId> to_local;
  to_local.reserve(comp.local_to_global.size());
  for (std::size_t i = 0; i < comp.local_to_global.size(); ++i)
    to_local[comp.local_to_global[i]] = static_cast<NodeId>(i);

  comp.players.reserve(players_global.size());
  for (const Edge& e : players_global)
    comp.players.push_back({to_local.at(e.src), to_local.at(e.dst)});
  std::sort(comp.players.begin(), comp.players.end(),
            [](const Edge& a, const Edge& b) {
              return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
            });

  comp.one_hop_count = 0;
  while (comp.one_hop_count < static_cast<std::int64_t>(comp.players.size()) &&
         comp.players[comp.one_hop_count].dst == 0)
    ++comp.one_hop_count;

  comp.frozen_degrees.reserve(comp.local_to_global.size());
  for (NodeId global : comp.local_to_global)
    comp.frozen_degrees.push_back(1.0 + static_cast<double>(g.in_degree(global)));
  return comp;
}

struct ReductionStats {
  std::int64_t full_edges = 0;      // directed edges among nodes within reach
  std::int64_t pruned_players = 0;  // players after pruning
  double percent_reduction = 0.0;
};

// Size of the naive receptive field (all edges among nodes within
// num_layers undirected hops) versus the pruned player set.
inline ReductionStats count_reduction(const Graph& g, NodeId target,
                                      int num_layers) {
  std::unordered_map<NodeId, int> dist;
  dist[target] = 0;
  std::queue<NodeId> frontier;
  frontier.push(target);
  while (!frontier.empty()) {
    NodeId v = frontier.front();
    frontier.pop();
    int d = dist[v];
    if (d == num_layers) continue;
    auto visit = [&](NodeId u) {
      if (dist.emplace(u, d + 1).second) frontier.push(u);
    };
    for (NodeId u : g.in_neighbors(v)) visit(u);
    for (NodeId u : g.out_neighbors(v)) visit(u);
  }

  ReductionStats stats;
  for (const auto& [u, d] : dist)
    for (NodeId v : g.out_neighbors(u))
      if (dist.count(v)) ++stats.full_edges;
  stats.pruned_players = extract_pruned(g, target, num_layers).num_players();
  if (stats.full_edges > 0)
    stats.percent_reduction =
        100.0 * (1.0 - static_cast<double>(stats.pruned_players) /
                           static_cast<double>(stats.full_edges));
  return stats;
}

}  // namespace edgeshap
