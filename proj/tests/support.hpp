#pragma once

// Random fixtures and brute-force oracles shared by the test binaries. The
// oracles deliberately avoid the library's own routines.

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <tuple>
#include <vector>

#include "diprp/rng.hpp"
#include "diprp/store_graph.hpp"

namespace diprp::test {

// Connected graph: random spanning tree plus `extra` chords, integer lengths
// in [1, max_len] so path sums are exact. Node 0 is the entrance and the last
// node the prep zone.
inline StoreGraph random_graph(std::size_t n, std::size_t extra, Rng& rng, int max_len = 9) {
  std::vector<StoreNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {static_cast<NodeId>(i), NodeKind::intersection, double(i), 0.0};
  }
  nodes.front().kind = NodeKind::entrance;
  nodes.back().kind = NodeKind::prep_zone;
  std::vector<StoreEdge> edges;
  std::vector<std::vector<char>> used(n, std::vector<char>(n, 0));
  auto length = [&] { return double(1 + uniform_index(rng, std::size_t(max_len))); };
  for (std::size_t i = 1; i < n; ++i) {
    const auto j = uniform_index(rng, i);
    edges.push_back({NodeId(j), NodeId(i), length()});
    used[i][j] = used[j][i] = 1;
  }
  for (std::size_t k = 0, tries = 0; k < extra && tries < 100 * (extra + 1); ++tries) {
    const auto a = uniform_index(rng, n);
    const auto b = uniform_index(rng, n);
    if (a == b || used[a][b]) continue;
    used[a][b] = used[b][a] = 1;
    edges.push_back({NodeId(a), NodeId(b), length()});
    ++k;
  }
  return StoreGraph(std::move(nodes), std::move(edges));
}

struct BrutePath {
  double cost = kInfinity;
  std::vector<NodeId> nodes;
};

// Exhaustive search over simple paths; best by (cost, arcs, node sequence).
inline BrutePath brute_force_path(const StoreGraph& g, NodeId from, NodeId to,
                                  const EdgeWeight& weight) {
  BrutePath best;
  std::vector<NodeId> path{from};
  std::vector<char> on(g.size(), 0);
  on[from] = 1;
  std::function<void(NodeId, double)> dfs = [&](NodeId x, double cost) {
    if (x == to) {
      const bool better = best.nodes.empty() || cost < best.cost ||
                          (cost == best.cost && (path.size() < best.nodes.size() ||
                                                 (path.size() == best.nodes.size() && path < best.nodes)));
      if (better) {
        best.cost = cost;
        best.nodes = path;
      }
      return;
    }
    for (const auto& nb : g.neighbors(x)) {
      if (on[nb.node]) continue;
      on[nb.node] = 1;
      path.push_back(nb.node);
      dfs(nb.node, cost + weight(x, nb.node, nb.length));
      path.pop_back();
      on[nb.node] = 0;
    }
  };
  dfs(from, 0.0);
  return best;
}

// Relax d[i][j] = min(d[i][j], d[i][k] + w(k, j)) over every arc until nothing
// changes. Row-major n x n.
inline std::vector<double> fixpoint_all_pairs(const StoreGraph& g, const EdgeWeight& weight) {
  const std::size_t n = g.size();
  std::vector<double> d(n * n, kInfinity);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (NodeId k = 0; k < n; ++k) {
        if (d[i * n + k] == kInfinity) continue;
        for (const auto& nb : g.neighbors(k)) {
          const double c = d[i * n + k] + weight(k, nb.node, nb.length);
          if (c < d[i * n + nb.node]) {
            d[i * n + nb.node] = c;
            changed = true;
          }
        }
      }
    }
  }
  return d;
}

// Straight aisle 0 - 1 - ... - (n-1) of unit edges, entrance to prep zone.
inline StoreGraph line_graph(std::size_t n, double length = 1.0) {
  std::vector<StoreNode> nodes(n);
  std::vector<StoreEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {NodeId(i), NodeKind::product_position, double(i), 0.0};
    if (i > 0) edges.push_back({NodeId(i - 1), NodeId(i), length});
  }
  nodes.front().kind = NodeKind::entrance;
  nodes.back().kind = NodeKind::prep_zone;
  return StoreGraph(std::move(nodes), std::move(edges));
}

// 0 entrance; route A through node 1; route B through nodes 2 and 3; 4 prep.
// Route A is shorter (two arcs) but node 1 carries traffic 5 against 1 + 1.
inline StoreGraph two_route_graph() {
  std::vector<StoreNode> nodes{{0, NodeKind::entrance, 0, 0},
                               {1, NodeKind::product_position, 1, 1},
                               {2, NodeKind::product_position, 1, -1},
                               {3, NodeKind::product_position, 2, -1},
                               {4, NodeKind::prep_zone, 3, 0}};
  std::vector<StoreEdge> edges{{0, 1, 1}, {1, 4, 1}, {0, 2, 1}, {2, 3, 1}, {3, 4, 1}};
  return StoreGraph(std::move(nodes), std::move(edges));
}

inline std::vector<double> two_route_traffic() { return {0, 5, 1, 1, 0}; }

}  // namespace diprp::test
