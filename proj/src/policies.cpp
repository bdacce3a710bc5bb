#include "diprp/policies.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <tuple>

#include "diprp/errors.hpp"

namespace diprp {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::ql: return "ql";
    case PolicyKind::sp: return "sp";
    case PolicyKind::mp: return "mp";
    case PolicyKind::cn: return "cn";
  }
  return "sp";
}

PolicyKind parse_policy(std::string_view text) {
  if (text == "ql") return PolicyKind::ql;
  if (text == "sp") return PolicyKind::sp;
  if (text == "mp") return PolicyKind::mp;
  if (text == "cn") return PolicyKind::cn;
  throw ConfigError("unknown policy '" + std::string(text) + "'");
}

Policy Policy::shortest_path(const StoreGraph& graph) {
  Policy p(PolicyKind::sp);
  p.routes_ = std::make_shared<const RoutingTable>(graph, length_weight());
  return p;
}

Policy Policy::myopic(const StoreGraph& graph) {
  Policy p(PolicyKind::mp);
  p.routes_ = std::make_shared<const RoutingTable>(graph, length_weight());
  return p;
}

Policy Policy::crowded_nodes(const StoreGraph& graph, std::vector<double> node_traffic) {
  if (node_traffic.size() != graph.size()) {
    throw ConfigError("CN policy needs a traffic value for every node");
  }
  for (double t : node_traffic) {
    if (!(t >= 0.0)) throw ConfigError("CN policy needs non-negative traffic");
  }
  Policy p(PolicyKind::cn);
  p.routes_ = std::make_shared<const RoutingTable>(graph, traffic_weight(std::move(node_traffic)));
  return p;
}

Policy Policy::q_learning(std::shared_ptr<const QTable> table, RoutingBasis basis, double epsilon) {
  if (!table) throw ConfigError("QL policy needs a trained Q-table");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  Policy p(PolicyKind::ql);
  p.table_ = std::move(table);
  p.basis_ = basis;
  p.epsilon_ = epsilon;
  return p;
}

NodeId Policy::next_action(const Observation& obs, Rng& rng) const {
  if (obs.neighbor_customers.empty()) throw ContractViolation("picker node has no neighbours");
  const NodeId at = obs.picker_node;
  const NodeId target = obs.target_node;
  switch (kind_) {
    case PolicyKind::sp:
    case PolicyKind::cn:
      return routes_->next_hop(at, target);
    case PolicyKind::mp: {
      const double here = routes_->cost(at, target);
      if (here == kInfinity) throw NoPathError("target unreachable from node " + std::to_string(at));
      std::optional<std::tuple<int, double, NodeId>> best;
      for (const auto& [nb, count] : obs.neighbor_customers) {
        const double d = routes_->cost(nb, target);
        if (!(d < here)) continue;
        const std::tuple<int, double, NodeId> key{count, d, nb};
        if (!best || key < *best) best = key;
      }
      if (!best) throw NoPathError("no neighbour of node " + std::to_string(at) + " gets closer");
      return std::get<2>(*best);
    }
    case PolicyKind::ql: {
      std::vector<NodeId> legal;
      legal.reserve(obs.neighbor_customers.size());
      for (const auto& [nb, count] : obs.neighbor_customers) legal.push_back(nb);
      return select_action(*table_, QState{at, target}, legal, epsilon_, rng);
    }
  }
  throw ContractViolation("unknown policy");
}

std::vector<double> calibrate_traffic(std::shared_ptr<const StoreModel> model, std::size_t episodes,
                                      std::uint64_t seed) {
  if (episodes == 0) throw ConfigError("traffic calibration needs at least one episode");
  const auto& cfg = model->config();
  const std::size_t n = model->graph().size();
  StoreEnv env(model);
  std::vector<double> sum(n, 0.0);
  std::size_t samples = 0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    env.reset(derive_seed(seed, Stream::calibration, ep));
    for (std::size_t i = 0;; ++i) {
      const double t = static_cast<double>(i) * cfg.traffic_sample_s;
      if (t >= cfg.open_time_s) break;
      env.advance_to(t);
      for (NodeId v = 0; v < n; ++v) sum[v] += env.customers_at(v);
      ++samples;
    }
  }
  for (double& s : sum) s /= static_cast<double>(samples);
  return sum;
}

}  // namespace diprp
