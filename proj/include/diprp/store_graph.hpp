#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diprp {

using NodeId = std::uint32_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class NodeKind { entrance, exit, intersection, product_position, prep_zone };

std::string_view to_string(NodeKind kind);
NodeKind parse_node_kind(std::string_view text);

struct StoreNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::intersection;
  double x = 0.0;  // metres, metadata only
  double y = 0.0;
};

struct StoreEdge {
  NodeId u = 0;
  NodeId v = 0;
  double length = 0.0;  // metres
};

struct Product {
  std::string sku;
  NodeId node = 0;
};

struct Neighbor {
  NodeId node;
  double length;
};

// Undirected store graph. Node 0 is the entrance (shopping paths start there)
// and node size()-1 is the end depot. Immutable once built; validation is
// reported separately by validate() so that broken layouts can be inspected.
class StoreGraph {
 public:
  StoreGraph() = default;
  StoreGraph(std::vector<StoreNode> nodes, std::vector<StoreEdge> edges,
             std::vector<Product> products = {});

  std::size_t size() const { return nodes_.size(); }
  const StoreNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<StoreNode>& nodes() const { return nodes_; }
  const std::vector<StoreEdge>& edges() const { return edges_; }
  const std::vector<Product>& products() const { return products_; }

  /// Neighbours sorted by node id.
  std::span<const Neighbor> neighbors(NodeId id) const {
    return {adjacency_.data() + offsets_[id], adjacency_.data() + offsets_[id + 1]};
  }
  bool contains(NodeId id) const { return id < nodes_.size(); }
  bool adjacent(NodeId a, NodeId b) const;
  /// Length of edge a-b; throws ContractViolation when not adjacent.
  double edge_length(NodeId a, NodeId b) const;

  NodeId start_depot() const { return 0; }
  NodeId end_depot() const { return static_cast<NodeId>(nodes_.size() - 1); }
  /// Lowest-id prep zone node, if any.
  std::optional<NodeId> prep_zone() const;
  /// Nodes where customer shopping paths may end: exit nodes, or the prep
  /// zone when the layout has no dedicated exit.
  std::vector<NodeId> exit_nodes() const;
  /// Sorted, distinct nodes that hold at least one product (or have the
  /// product_position kind).
  std::vector<NodeId> product_nodes() const;

 private:
  std::vector<StoreNode> nodes_;
  std::vector<StoreEdge> edges_;
  std::vector<Product> products_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
};

/// Returns every structural violation; empty means valid.
std::vector<std::string> validate(const StoreGraph& graph);

// ---------------------------------------------------------------------------
// Shortest paths

/// Weight of traversing the arc from -> to whose physical length is `length`.
using EdgeWeight = std::function<double(NodeId from, NodeId to, double length)>;

EdgeWeight length_weight();
/// Arc weight = traffic of the node being entered.
EdgeWeight traffic_weight(std::vector<double> node_traffic);

struct Path {
  double cost = 0.0;
  std::vector<NodeId> nodes;  // inclusive of both endpoints
};

// Minimal-cost path. Ties are broken by fewest arcs and then by the
// lexicographically smallest node sequence. Throws NoPathError when `to` is
// unreachable.
Path shortest_path(const StoreGraph& graph, NodeId from, NodeId to, const EdgeWeight& weight);

enum class RoutingBasis { arc_distance, arc_crowdedness };

std::string_view to_string(RoutingBasis basis);
RoutingBasis parse_basis(std::string_view text);

struct CostMatrix {
  RoutingBasis basis = RoutingBasis::arc_distance;
  std::vector<NodeId> nodes;
  std::vector<double> values;  // row-major, nodes.size() squared

  std::size_t dimension() const { return nodes.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values[i * nodes.size() + j]; }
};

CostMatrix distance_matrix(const StoreGraph& graph, std::span<const NodeId> nodes);
CostMatrix crowdedness_matrix(const StoreGraph& graph, std::span<const double> node_traffic,
                              std::span<const NodeId> nodes);

// All-pairs routing under one edge weight: cost-to-target and the tie-broken
// next hop for every (from, to) pair. Built with one reverse Dijkstra per
// target, so it agrees exactly with shortest_path().
class RoutingTable {
 public:
  RoutingTable(const StoreGraph& graph, const EdgeWeight& weight);

  std::size_t size() const { return n_; }
  double cost(NodeId from, NodeId to) const { return cost_[to * n_ + from]; }
  std::uint32_t hops(NodeId from, NodeId to) const { return hops_[to * n_ + from]; }
  /// Next node on the path from -> to. Throws NoPathError when unreachable;
  /// returns `from` when from == to.
  NodeId next_hop(NodeId from, NodeId to) const;
  Path path(NodeId from, NodeId to) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> cost_;
  std::vector<std::uint32_t> hops_;
  std::vector<NodeId> next_;
};

}  // namespace diprp
