#include "diprp/store_graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <tuple>
#include <utility>

#include "diprp/errors.hpp"

namespace diprp {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::entrance: return "entrance";
    case NodeKind::exit: return "exit";
    case NodeKind::intersection: return "intersection";
    case NodeKind::product_position: return "product_position";
    case NodeKind::prep_zone: return "prep_zone";
  }
  return "intersection";
}

NodeKind parse_node_kind(std::string_view text) {
  if (text == "entrance") return NodeKind::entrance;
  if (text == "exit") return NodeKind::exit;
  if (text == "intersection") return NodeKind::intersection;
  if (text == "product_position") return NodeKind::product_position;
  if (text == "prep_zone") return NodeKind::prep_zone;
  throw ParseError("unknown node kind '" + std::string(text) + "'");
}

std::string_view to_string(RoutingBasis basis) {
  return basis == RoutingBasis::arc_distance ? "distance" : "crowdedness";
}

RoutingBasis parse_basis(std::string_view text) {
  if (text == "distance" || text == "arc_distance") return RoutingBasis::arc_distance;
  if (text == "crowdedness" || text == "arc_crowdedness") return RoutingBasis::arc_crowdedness;
  throw ConfigError("unknown routing basis '" + std::string(text) + "'");
}

StoreGraph::StoreGraph(std::vector<StoreNode> nodes, std::vector<StoreEdge> edges,
                       std::vector<Product> products)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), products_(std::move(products)) {
  const std::size_t n = nodes_.size();
  std::vector<std::vector<Neighbor>> lists(n);
  for (const auto& e : edges_) {
    // Dangling endpoints are left for validate() to report.
    if (e.u >= n || e.v >= n || e.u == e.v) continue;
    lists[e.u].push_back({e.v, e.length});
    lists[e.v].push_back({e.u, e.length});
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& l = lists[i];
    std::sort(l.begin(), l.end(), [](const Neighbor& a, const Neighbor& b) {
      return std::tie(a.node, a.length) < std::tie(b.node, b.length);
    });
    // Parallel edges collapse to the shortest one.
    l.erase(std::unique(l.begin(), l.end(),
                        [](const Neighbor& a, const Neighbor& b) { return a.node == b.node; }),
            l.end());
    offsets_[i + 1] = offsets_[i] + l.size();
  }
  adjacency_.reserve(offsets_[n]);
  for (auto& l : lists) adjacency_.insert(adjacency_.end(), l.begin(), l.end());
}

bool StoreGraph::adjacent(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b)) return false;
  auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), Neighbor{b, 0.0},
                            [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; });
}

double StoreGraph::edge_length(NodeId a, NodeId b) const {
  if (contains(a)) {
    for (const auto& nb : neighbors(a)) {
      if (nb.node == b) return nb.length;
    }
  }
  throw ContractViolation("nodes " + std::to_string(a) + " and " + std::to_string(b) +
                          " are not adjacent");
}

std::optional<NodeId> StoreGraph::prep_zone() const {
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::prep_zone) return n.id;
  }
  return std::nullopt;
}

std::vector<NodeId> StoreGraph::exit_nodes() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::exit) out.push_back(n.id);
  }
  if (out.empty()) {
    if (auto p = prep_zone()) out.push_back(*p);
  }
  return out;
}

std::vector<NodeId> StoreGraph::product_nodes() const {
  std::vector<NodeId> out;
  for (const auto& p : products_) {
    if (contains(p.node)) out.push_back(p.node);
  }
  for (const auto& n : nodes_) {
    if (n.kind == NodeKind::product_position) out.push_back(n.id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> validate(const StoreGraph& graph) {
  std::vector<std::string> report;
  const std::size_t n = graph.size();
  if (n < 2) {
    report.emplace_back("layout needs at least an entrance and an end depot");
    return report;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.nodes()[i].id != i) {
      report.push_back("node at index " + std::to_string(i) + " has id " +
                       std::to_string(graph.nodes()[i].id));
    }
  }
  std::size_t entrances = 0;
  for (const auto& node : graph.nodes()) entrances += node.kind == NodeKind::entrance;
  if (graph.node(0).kind != NodeKind::entrance) report.emplace_back("node 0 is not an entrance");
  if (entrances > 1) report.emplace_back("more than one entrance node");
  if (!graph.prep_zone()) report.emplace_back("no prep_zone node");
  const auto end_kind = graph.node(graph.end_depot()).kind;
  if (end_kind != NodeKind::prep_zone && end_kind != NodeKind::exit) {
    report.push_back("end depot node " + std::to_string(graph.end_depot()) +
                     " is neither exit nor prep_zone");
  }

  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& e : graph.edges()) {
    const std::string name = "edge " + std::to_string(e.u) + "-" + std::to_string(e.v);
    if (e.u >= n || e.v >= n) {
      report.push_back(name + " references a missing node");
      continue;
    }
    if (e.u == e.v) report.push_back(name + " is a self-loop");
    if (!(e.length > 0.0) || !std::isfinite(e.length)) {
      report.push_back(name + " has non-positive length");
    }
    if (!seen.insert(std::minmax(e.u, e.v)).second) report.push_back(name + " is duplicated");
  }
  for (const auto& p : graph.products()) {
    if (p.node >= n) report.push_back("product " + p.sku + " references a missing node");
  }

  std::vector<char> reached(n, 0);
  std::vector<NodeId> stack{0};
  reached[0] = 1;
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    for (const auto& nb : graph.neighbors(x)) {
      if (!reached[nb.node]) {
        reached[nb.node] = 1;
        stack.push_back(nb.node);
      }
    }
  }
  for (NodeId i = 0; i < n; ++i) {
    if (!reached[i]) report.push_back("node " + std::to_string(i) + " unreachable from entrance 0");
  }
  return report;
}

EdgeWeight length_weight() {
  return [](NodeId, NodeId, double length) { return length; };
}

EdgeWeight traffic_weight(std::vector<double> node_traffic) {
  return [traffic = std::move(node_traffic)](NodeId, NodeId to, double) { return traffic.at(to); };
}

namespace {

struct TargetTree {
  std::vector<double> cost;
  std::vector<std::uint32_t> hops;
};

// Reverse Dijkstra towards `target`: cost[x] is the cheapest x -> target cost
// with the fewest arcs among the cheapest.
TargetTree solve_to_target(const StoreGraph& graph, NodeId target, const EdgeWeight& weight) {
  const std::size_t n = graph.size();
  TargetTree tree{std::vector<double>(n, kInfinity),
                  std::vector<std::uint32_t>(n, std::numeric_limits<std::uint32_t>::max())};
  using Key = std::tuple<double, std::uint32_t, NodeId>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> open;
  tree.cost[target] = 0.0;
  tree.hops[target] = 0;
  open.emplace(0.0, 0, target);
  std::vector<char> done(n, 0);
  while (!open.empty()) {
    const auto [c, h, y] = open.top();
    open.pop();
    if (done[y]) continue;
    done[y] = 1;
    for (const auto& nb : graph.neighbors(y)) {
      const NodeId x = nb.node;
      if (done[x]) continue;
      const double w = weight(x, y, nb.length);
      if (w < 0.0) throw ContractViolation("negative edge weight");
      const double cand = w + c;
      const std::uint32_t cand_hops = h + 1;
      if (cand < tree.cost[x] || (cand == tree.cost[x] && cand_hops < tree.hops[x])) {
        tree.cost[x] = cand;
        tree.hops[x] = cand_hops;
        open.emplace(cand, cand_hops, x);
      }
    }
  }
  return tree;
}

NodeId tie_broken_next(const StoreGraph& graph, const TargetTree& tree, NodeId x,
                       const EdgeWeight& weight) {
  for (const auto& nb : graph.neighbors(x)) {
    const NodeId y = nb.node;
    if (tree.hops[y] + 1 != tree.hops[x]) continue;
    if (weight(x, y, nb.length) + tree.cost[y] == tree.cost[x]) return y;
  }
  throw NoPathError("no next hop from node " + std::to_string(x));
}

void require_node(const StoreGraph& graph, NodeId id) {
  if (!graph.contains(id)) throw ContractViolation("node " + std::to_string(id) + " not in graph");
}

CostMatrix matrix_for(const StoreGraph& graph, std::span<const NodeId> nodes,
                      const EdgeWeight& weight, RoutingBasis basis) {
  CostMatrix m;
  m.basis = basis;
  m.nodes.assign(nodes.begin(), nodes.end());
  const std::size_t k = nodes.size();
  m.values.assign(k * k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    require_node(graph, nodes[j]);
    const auto tree = solve_to_target(graph, nodes[j], weight);
    for (std::size_t i = 0; i < k; ++i) {
      require_node(graph, nodes[i]);
      const double c = tree.cost[nodes[i]];
      if (c == kInfinity) {
        throw NoPathError("no path from node " + std::to_string(nodes[i]) + " to node " +
                          std::to_string(nodes[j]));
      }
      m.values[i * k + j] = c;
    }
  }
  return m;
}

}  // namespace

Path shortest_path(const StoreGraph& graph, NodeId from, NodeId to, const EdgeWeight& weight) {
  require_node(graph, from);
  require_node(graph, to);
  const auto tree = solve_to_target(graph, to, weight);
  if (tree.cost[from] == kInfinity) {
    throw NoPathError("no path from node " + std::to_string(from) + " to node " +
                      std::to_string(to));
  }
  Path path{tree.cost[from], {from}};
  for (NodeId x = from; x != to;) {
    x = tie_broken_next(graph, tree, x, weight);
    path.nodes.push_back(x);
  }
  return path;
}

CostMatrix distance_matrix(const StoreGraph& graph, std::span<const NodeId> nodes) {
  return matrix_for(graph, nodes, length_weight(), RoutingBasis::arc_distance);
}

CostMatrix crowdedness_matrix(const StoreGraph& graph, std::span<const double> node_traffic,
                              std::span<const NodeId> nodes) {
  if (node_traffic.size() != graph.size()) {
    throw ContractViolation("node traffic must have one entry per node");
  }
  for (double t : node_traffic) {
    if (!(t >= 0.0)) throw ContractViolation("node traffic must be non-negative");
  }
  return matrix_for(graph, nodes,
                    traffic_weight(std::vector<double>(node_traffic.begin(), node_traffic.end())),
                    RoutingBasis::arc_crowdedness);
}

RoutingTable::RoutingTable(const StoreGraph& graph, const EdgeWeight& weight) : n_(graph.size()) {
  cost_.resize(n_ * n_);
  hops_.resize(n_ * n_);
  next_.resize(n_ * n_);
  for (NodeId t = 0; t < n_; ++t) {
    auto tree = solve_to_target(graph, t, weight);
    for (NodeId x = 0; x < n_; ++x) {
      const std::size_t at = t * n_ + x;
      cost_[at] = tree.cost[x];
      hops_[at] = tree.hops[x];
      next_[at] = (x == t || tree.cost[x] == kInfinity) ? x : tie_broken_next(graph, tree, x, weight);
    }
  }
}

NodeId RoutingTable::next_hop(NodeId from, NodeId to) const {
  if (from >= n_ || to >= n_) throw ContractViolation("node outside routing table");
  if (cost(from, to) == kInfinity) {
    throw NoPathError("no path from node " + std::to_string(from) + " to node " +
                      std::to_string(to));
  }
  return next_[to * n_ + from];
}

Path RoutingTable::path(NodeId from, NodeId to) const {
  next_hop(from, to);  // reachability check
  Path p{cost(from, to), {from}};
  for (NodeId x = from; x != to;) {
    x = next_[to * n_ + x];
    p.nodes.push_back(x);
  }
  return p;
}

}  // namespace diprp
