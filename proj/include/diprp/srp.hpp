#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "diprp/store_env.hpp"
#include "diprp/store_graph.hpp"

namespace diprp {

// Static sequencing problem for one order. Index 0 is the start depot, the
// last index the end depot and everything in between a picking location.
struct SrpInstance {
  std::vector<NodeId> nodes;  // graph labels, one per index
  std::vector<double> costs;  // row-major, nodes.size() squared

  std::size_t dimension() const { return nodes.size(); }
  std::size_t picks() const { return nodes.size() - 2; }
  double cost(std::size_t i, std::size_t j) const { return costs[i * nodes.size() + j]; }

  /// Throws ContractViolation unless there is at least one pick, the matrix is
  /// square and finite, and picking labels are distinct.
  void validate() const;
};

struct SrpSolution {
  std::vector<NodeId> sequence;  // start depot, picks, end depot
  double cost = 0.0;
  std::size_t iterations = 0;  // master problems solved in the cut loop
  std::size_t cuts = 0;        // subtour cuts in the pool at the end

  /// Picking locations only, without the depots.
  std::vector<NodeId> picks() const { return {sequence.begin() + 1, sequence.end() - 1}; }
};

/// Sum of consecutive matrix entries along `sequence` (labels, depots included).
double sequence_cost(const SrpInstance& instance, std::span<const NodeId> sequence);

/// Assignment relaxation with subtour-elimination cuts, solved exactly.
/// Equal-cost optima resolve to the lexicographically smallest sequence.
SrpSolution solve_cutting_planes(const SrpInstance& instance);

enum class OracleMethod { held_karp, enumeration };

inline constexpr std::size_t kHeldKarpLimit = 15;
inline constexpr std::size_t kEnumerationLimit = 9;

/// Exhaustive reference solver; throws SizeError above the method's limit.
SrpSolution solve_oracle(const SrpInstance& instance, OracleMethod method = OracleMethod::held_karp);

/// Cost matrix over {start} ∪ locations ∪ {end}. `node_traffic` is only read
/// for the crowdedness basis. Locations are sorted; duplicates are rejected.
SrpInstance build_instance(const StoreGraph& graph, std::span<const NodeId> locations,
                           RoutingBasis basis, std::span<const double> node_traffic,
                           NodeId start, NodeId end);
SrpInstance build_instance(const StoreGraph& graph, std::span<const NodeId> locations,
                           RoutingBasis basis, std::span<const double> node_traffic = {});
SrpInstance build_instance(const StoreGraph& graph, const OnlineOrder& order, RoutingBasis basis,
                           std::span<const double> node_traffic = {});

/// Sequencer for the environment: round trip from the depot it is given,
/// costs looked up in a precomputed all-pairs table.
Sequencer make_srp_sequencer(const StoreGraph& graph, RoutingBasis basis,
                             std::vector<double> node_traffic = {});

}  // namespace diprp
