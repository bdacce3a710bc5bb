#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "diprp/qlearning.hpp"
#include "diprp/rng.hpp"
#include "diprp/store_env.hpp"
#include "diprp/store_graph.hpp"

namespace diprp {

enum class PolicyKind { ql, sp, mp, cn };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy(std::string_view text);

// Step rule between two sequence targets. Immutable once built; the rng passed
// to next_action is the caller's.
class Policy {
 public:
  /// Next hop on the distance shortest path.
  static Policy shortest_path(const StoreGraph& graph);
  /// Fewest observed customers among neighbours that get strictly closer.
  static Policy myopic(const StoreGraph& graph);
  /// Next hop on the path with the least average traffic.
  static Policy crowded_nodes(const StoreGraph& graph, std::vector<double> node_traffic);
  /// Epsilon-greedy on a trained table; `basis` is the sequencing basis the
  /// table was trained under.
  static Policy q_learning(std::shared_ptr<const QTable> table, RoutingBasis basis, double epsilon);

  PolicyKind kind() const { return kind_; }
  /// Training basis of a QL table; empty for the other policies.
  std::optional<RoutingBasis> trained_basis() const { return basis_; }

  NodeId next_action(const Observation& obs, Rng& rng) const;

 private:
  explicit Policy(PolicyKind kind) : kind_(kind) {}

  PolicyKind kind_;
  std::shared_ptr<const RoutingTable> routes_;
  std::shared_ptr<const QTable> table_;
  std::optional<RoutingBasis> basis_;
  double epsilon_ = 0.0;
};

/// Average customer count per node over customer-only runs of `episodes`
/// opening days, sampled every `traffic_sample_s` seconds.
std::vector<double> calibrate_traffic(std::shared_ptr<const StoreModel> model, std::size_t episodes,
                                      std::uint64_t seed);

}  // namespace diprp
