#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "edgeshap/common.hpp"

namespace edgeshap {

struct Edge {
  NodeId src;
  NodeId dst;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Compressed sparse row adjacency in both directions. Out-neighbors drive
// message passing (src -> dst), in-neighbors drive the reverse walks used
// to build computational graphs. Neighbor lists are sorted, so membership
// is binary-searchable and iteration order is canonical.
class Graph {
 public:
  Graph() = default;

  // `edges` holds each logical edge once. With undirected=true every edge
  // also gets its reversal in storage, and num_edges() counts the stored
  // (directed) entries.
  static Graph from_edges(NodeId num_nodes, std::vector<Edge> edges,
                          bool undirected) {
    require(num_nodes >= 0, "Graph: negative node count");
    if (undirected) {
      std::size_t original = edges.size();
      edges.reserve(original * 2);
      for (std::size_t i = 0; i < original; ++i)
        edges.push_back({edges[i].dst, edges[i].src});
    }
    for (const Edge& e : edges) {
      require(e.src >= 0 && e.src < num_nodes && e.dst >= 0 && e.dst < num_nodes,
              "Graph: edge endpoint out of range: " + std::to_string(e.src) +
                  " -> " + std::to_string(e.dst));
      require(e.src != e.dst,
              "Graph: self-loop at node " + std::to_string(e.src));
    }

    Graph g;
    g.n_ = num_nodes;
    g.undirected_ = undirected;
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    for (std::size_t i = 1; i < edges.size(); ++i)
      require(!(edges[i] == edges[i - 1]),
              "Graph: duplicate edge " + std::to_string(edges[i].src) + " -> " +
                  std::to_string(edges[i].dst));

    g.out_off_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
    g.out_adj_.resize(edges.size());
    for (const Edge& e : edges) ++g.out_off_[e.src + 1];
    for (NodeId v = 0; v < num_nodes; ++v) g.out_off_[v + 1] += g.out_off_[v];
    for (std::size_t i = 0; i < edges.size(); ++i) g.out_adj_[i] = edges[i].dst;

    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
    });
    g.in_off_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
    g.in_adj_.resize(edges.size());
    for (const Edge& e : edges) ++g.in_off_[e.dst + 1];
    for (NodeId v = 0; v < num_nodes; ++v) g.in_off_[v + 1] += g.in_off_[v];
    for (std::size_t i = 0; i < edges.size(); ++i) g.in_adj_[i] = edges[i].src;
    return g;
  }

  NodeId num_nodes() const { return n_; }
  std::int64_t num_edges() const {
    return static_cast<std::int64_t>(out_adj_.size());
  }
  bool undirected() const { return undirected_; }

  std::span<const NodeId> out_neighbors(NodeId u) const {
    return {out_adj_.data() + out_off_[u],
            static_cast<std::size_t>(out_off_[u + 1] - out_off_[u])};
  }
  std::span<const NodeId> in_neighbors(NodeId v) const {
    return {in_adj_.data() + in_off_[v],
            static_cast<std::size_t>(in_off_[v + 1] - in_off_[v])};
  }
  std::int64_t out_degree(NodeId u) const { return out_off_[u + 1] - out_off_[u]; }
  std::int64_t in_degree(NodeId v) const { return in_off_[v + 1] - in_off_[v]; }

  // Stored directed edges in (src, dst) order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(out_adj_.size());
    for (NodeId u = 0; u < n_; ++u)
      for (NodeId v : out_neighbors(u)) out.push_back({u, v});
    return out;
  }

 private:
  NodeId n_ = 0;
  bool undirected_ = false;
  std::vector<std::int64_t> out_off_{0};
  std::vector<std::int64_t> in_off_{0};
  std::vector<NodeId> out_adj_;
  std::vector<NodeId> in_adj_;
};

namespace detail {

inline std::uint64_t edge_key(NodeId a, NodeId b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace detail

// Text format: one "src dst" pair per line, '#' starts a comment, blank
// lines are skipped. With undirected=true each edge appears once in the
// file (either orientation) and both directions are stored; listing both
// orientations is reported as a duplicate. num_nodes < 0 means infer it
// as max id + 1.
inline Graph load_edge_list(const std::string& path, bool undirected,
                            NodeId num_nodes = -1) {
  std::ifstream in(path);
  require(in.good(), "load_edge_list: cannot open " + path);

  auto where = [&path](int line) {
    return path + ":" + std::to_string(line) + ": ";
  };

  std::vector<Edge> edges;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  int lineno = 0;
  NodeId max_id = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      // save_edge_list records the node count as "# nodes: N" so graphs
      // with trailing isolated nodes survive a round trip. The header is
      // honored only when the caller did not fix the count.
      if (num_nodes < 0) {
        const char* p = line.data() + hash + 1;
        const char* end = line.data() + line.size();
        while (p < end && (*p == ' ' || *p == '\t')) ++p;
        const std::string_view tag = "nodes:";
        if (static_cast<std::size_t>(end - p) > tag.size() &&
            std::string_view(p, tag.size()) == tag) {
          p += tag.size();
          while (p < end && (*p == ' ' || *p == '\t')) ++p;
          long long declared = -1;
          auto [next, ec] = std::from_chars(p, end, declared);
          if (ec == std::errc() && declared >= 0) {
            (void)next;
            num_nodes = static_cast<NodeId>(declared);
          }
        }
      }
      line.resize(hash);
    }
    const char* p = line.data();
    const char* end = p + line.size();
    auto skip_ws = [&] {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    };
    skip_ws();
    if (p == end) continue;

    long long ids[2];
    for (int t = 0; t < 2; ++t) {
      auto [next, ec] = std::from_chars(p, end, ids[t]);
      require(ec == std::errc(),
              where(lineno) + "expected two integer node ids");
      p = next;
      skip_ws();
    }
    require(p == end, where(lineno) + "trailing characters after edge");

    require(ids[0] >= 0 && ids[1] >= 0,
            where(lineno) + "negative node id");
    if (num_nodes >= 0)
      require(ids[0] < num_nodes && ids[1] < num_nodes,
              where(lineno) + "node id out of range (num_nodes=" +
                  std::to_string(num_nodes) + ")");
    NodeId u = static_cast<NodeId>(ids[0]);
    NodeId v = static_cast<NodeId>(ids[1]);
    require(u != v, where(lineno) + "self-loop at node " + std::to_string(u));

    // Undirected duplicates are detected on the canonical orientation so
    // "1 0" after "0 1" is caught.
    std::uint64_t key = undirected
                            ? detail::edge_key(std::min(u, v), std::max(u, v))
                            : detail::edge_key(u, v);
    require(seen.insert(key).second,
            where(lineno) + "duplicate edge " + std::to_string(u) + " " +
                std::to_string(v));
    edges.push_back({u, v});
    max_id = std::max({max_id, u, v});
  }
  if (num_nodes < 0) num_nodes = max_id + 1;
  return Graph::from_edges(num_nodes, std::move(edges), undirected);
}

// Inverse of load_edge_list. Undirected graphs are written with each edge
// once, in canonical (small id first) orientation.
inline void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "save_edge_list: cannot open " + path + " for writing");
  out << "# nodes: " << g.num_nodes() << "\n";
  for (const Edge& e : g.edges()) {
    if (g.undirected() && e.src > e.dst) continue;
    out << e.src << " " << e.dst << "\n";
  }
  require(out.good(), "save_edge_list: write failed for " + path);
}

}  // namespace edgeshap
