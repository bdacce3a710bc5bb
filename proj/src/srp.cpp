#include "diprp/srp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <utility>

#include "diprp/errors.hpp"

namespace diprp {

void SrpInstance::validate() const {
  const std::size_t k = nodes.size();
  if (k < 3) throw ContractViolation("SRP instance needs at least one picking location");
  if (costs.size() != k * k) throw ContractViolation("SRP cost matrix has the wrong size");
  for (double c : costs) {
    if (!std::isfinite(c)) throw ContractViolation("SRP cost matrix has a non-finite entry");
  }
  std::vector<NodeId> picks(nodes.begin() + 1, nodes.end() - 1);
  std::sort(picks.begin(), picks.end());
  if (std::adjacent_find(picks.begin(), picks.end()) != picks.end()) {
    throw ContractViolation("SRP picking locations must be distinct");
  }
}

namespace {

constexpr double kForbidden = 1e12;

using Arc = std::pair<std::size_t, std::size_t>;

double tolerance(double value) { return 1e-9 * std::max(1.0, std::abs(value)); }

double index_cost(const SrpInstance& inst, std::span<const std::size_t> order) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) total += inst.cost(order[i], order[i + 1]);
  return total;
}

SrpSolution from_indices(const SrpInstance& inst, std::span<const std::size_t> order) {
  SrpSolution sol;
  for (std::size_t i : order) sol.sequence.push_back(inst.nodes[i]);
  sol.cost = index_cost(inst, order);
  return sol;
}

// Pick indices 1..k-2 ordered by label.
std::vector<std::size_t> picks_by_label(const SrpInstance& inst) {
  std::vector<std::size_t> idx(inst.picks());
  std::iota(idx.begin(), idx.end(), 1);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return inst.nodes[a] < inst.nodes[b]; });
  return idx;
}

struct Assignment {
  std::vector<std::size_t> succ;
  double value = 0.0;
};

// Min-cost perfect assignment (shortest augmenting paths with potentials).
std::optional<Assignment> assign(const std::vector<double>& a, std::size_t n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.succ.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.succ[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = a[i * n + out.succ[i]];
    if (c >= kForbidden) return std::nullopt;
    out.value += c;
  }
  return out;
}

std::vector<std::uint32_t> cycles_of(const std::vector<std::size_t>& succ) {
  std::vector<std::uint32_t> masks;
  std::uint32_t seen = 0;
  for (std::size_t s = 0; s < succ.size(); ++s) {
    if (seen >> s & 1U) continue;
    std::uint32_t mask = 0;
    for (std::size_t x = s; !(mask >> x & 1U); x = succ[x]) mask |= 1U << x;
    seen |= mask;
    masks.push_back(mask);
  }
  return masks;
}

// Cut loop state for one instance. The closing arc end -> start turns the
// open path into a tour; a cut on node set S allows at most |S| - 1 arcs
// inside S.
class CutSolver {
 public:
  explicit CutSolver(const SrpInstance& inst) : n_(inst.dimension()), base_(n_ * n_) {
    const std::size_t end = n_ - 1;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        double c = inst.cost(i, j);
        if (i == j) c = kForbidden;
        if (i == end) c = j == 0 ? 0.0 : kForbidden;
        if (j == 0 && i != end) c = kForbidden;
        if (i == 0 && j == end) c = kForbidden;
        base_[i * n_ + j] = c;
      }
    }
  }

  std::size_t iterations() const { return iterations_; }
  std::size_t cuts() const { return pool_.size(); }

  /// Assignment bound under `required`, ignoring every cut.
  std::optional<double> relaxed_bound(const std::vector<Arc>& required) const {
    auto sol = assign(matrix({}, required), n_);
    if (!sol) return std::nullopt;
    return sol->value;
  }

  /// Optimal single tour respecting `required` among those cheaper than
  /// `bound`; `incumbent` is a known tour that the result must beat.
  std::optional<Assignment> solve(const std::vector<Arc>& required,
                                  double bound = std::numeric_limits<double>::infinity(),
                                  std::optional<Assignment> incumbent = std::nullopt) {
    for (;;) {
      ++iterations_;
      auto sol = master(required, bound, incumbent);
      if (!sol) return std::nullopt;
      const auto components = cycles_of(sol->succ);
      if (components.size() == 1) return sol;
      for (auto mask : components) {
        if (std::find(pool_.begin(), pool_.end(), mask) == pool_.end()) pool_.push_back(mask);
      }
    }
  }

 private:
  std::vector<double> matrix(const std::vector<Arc>& forbidden, const std::vector<Arc>& required) const {
    std::vector<double> a = base_;
    for (auto [i, j] : forbidden) a[i * n_ + j] = kForbidden;
    for (auto [i, j] : required) {
      const double keep = a[i * n_ + j];
      for (std::size_t x = 0; x < n_; ++x) {
        a[i * n_ + x] = kForbidden;
        a[x * n_ + j] = kForbidden;
      }
      a[i * n_ + j] = keep;
    }
    return a;
  }

  // Exact master: assignment plus every pooled cut, by branching on the arcs
  // of a violated cut.
  std::optional<Assignment> master(const std::vector<Arc>& required, double bound,
                                   const std::optional<Assignment>& incumbent) {
    std::optional<Assignment> best = incumbent;
    if (incumbent) bound = std::min(bound, incumbent->value);
    branch({}, required, best, bound);
    return best;
  }

  void branch(std::vector<Arc> forbidden, std::vector<Arc> required, std::optional<Assignment>& best,
              double& bound) {
    auto sol = assign(matrix(forbidden, required), n_);
    if (!sol || sol->value >= bound) return;
    const std::uint32_t* violated = nullptr;
    for (const auto& mask : pool_) {
      int inside = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if ((mask >> i & 1U) && (mask >> sol->succ[i] & 1U)) ++inside;
      }
      if (inside >= std::popcount(mask)) {
        violated = &mask;
        break;
      }
    }
    if (!violated) {
      bound = sol->value;
      best = std::move(sol);
      return;
    }
    std::vector<Arc> free_arcs;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!(*violated >> i & 1U)) continue;
      const Arc arc{i, sol->succ[i]};
      if (std::find(required.begin(), required.end(), arc) == required.end()) free_arcs.push_back(arc);
    }
    for (std::size_t t = 0; t < free_arcs.size(); ++t) {
      auto f = forbidden;
      f.push_back(free_arcs[t]);
      auto r = required;
      r.insert(r.end(), free_arcs.begin(), free_arcs.begin() + static_cast<std::ptrdiff_t>(t));
      branch(std::move(f), std::move(r), best, bound);
    }
  }

  std::size_t n_;
  std::vector<double> base_;
  std::vector<std::uint32_t> pool_;
  std::size_t iterations_ = 0;
};

// Nearest neighbour followed by 2-opt on the open path; returns the tour as a
// successor array with the closing arc.
Assignment heuristic_tour(const SrpInstance& inst) {
  const std::size_t k = inst.dimension();
  std::vector<std::size_t> order{0};
  std::vector<char> used(k, 0);
  used[0] = used[k - 1] = 1;
  for (std::size_t step = 1; step + 1 < k; ++step) {
    std::size_t best = k;
    for (std::size_t j = 1; j + 1 < k; ++j) {
      if (!used[j] && (best == k || inst.cost(order.back(), j) < inst.cost(order.back(), best))) best = j;
    }
    used[best] = 1;
    order.push_back(best);
  }
  order.push_back(k - 1);
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 1; i + 2 < k; ++i) {
      for (std::size_t j = i + 1; j + 1 < k; ++j) {
        std::vector<std::size_t> cand = order;
        std::reverse(cand.begin() + static_cast<std::ptrdiff_t>(i), cand.begin() + static_cast<std::ptrdiff_t>(j + 1));
        if (index_cost(inst, cand) < index_cost(inst, order)) {
          order = std::move(cand);
          improved = true;
        }
      }
    }
  }
  Assignment tour;
  tour.succ.assign(k, 0);
  for (std::size_t i = 0; i + 1 < k; ++i) tour.succ[order[i]] = order[i + 1];
  tour.succ[k - 1] = 0;
  tour.value = index_cost(inst, order);
  return tour;
}

}  // namespace

double sequence_cost(const SrpInstance& instance, std::span<const NodeId> sequence) {
  const std::size_t k = instance.dimension();
  if (sequence.size() != k || sequence.front() != instance.nodes.front() ||
      sequence.back() != instance.nodes.back()) {
    throw ContractViolation("sequence does not match the instance depots");
  }
  std::vector<std::size_t> order{0};
  std::vector<char> used(k, 0);
  for (std::size_t p = 1; p + 1 < k; ++p) {
    std::size_t hit = k;
    for (std::size_t i = 1; i + 1 < k; ++i) {
      if (instance.nodes[i] == sequence[p] && !used[i]) hit = i;
    }
    if (hit == k) throw ContractViolation("sequence is not a permutation of the picking set");
    used[hit] = 1;
    order.push_back(hit);
  }
  order.push_back(k - 1);
  return index_cost(instance, order);
}

SrpSolution solve_cutting_planes(const SrpInstance& instance) {
  instance.validate();
  const std::size_t k = instance.dimension();
  CutSolver solver(instance);
  const auto optimum = solver.solve({}, std::numeric_limits<double>::infinity(), heuristic_tour(instance));
  if (!optimum) throw ContractViolation("SRP instance is infeasible");
  const std::size_t iterations = solver.iterations();
  const double limit = optimum->value + tolerance(optimum->value);

  // Fix positions one at a time to the smallest label that still admits an
  // optimal completion. The incumbent tour always does, so only smaller
  // labels need a check.
  std::vector<std::size_t> succ = optimum->succ;
  std::vector<std::size_t> order{0};
  std::vector<Arc> prefix;
  auto remaining = picks_by_label(instance);
  while (!remaining.empty()) {
    std::size_t chosen = succ[order.back()];
    for (std::size_t cand : remaining) {
      if (instance.nodes[cand] >= instance.nodes[chosen]) break;
      auto required = prefix;
      required.emplace_back(order.back(), cand);
      const auto lb = solver.relaxed_bound(required);
      if (!lb || *lb > limit) continue;
      const auto sol = solver.solve(required, std::nextafter(limit, std::numeric_limits<double>::infinity()));
      if (sol && sol->value <= limit) {
        chosen = cand;
        succ = sol->succ;
        break;
      }
    }
    prefix.emplace_back(order.back(), chosen);
    order.push_back(chosen);
    remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));
  }
  order.push_back(k - 1);

  auto out = from_indices(instance, order);
  out.iterations = iterations;
  out.cuts = solver.cuts();
  return out;
}

namespace {

SrpSolution held_karp(const SrpInstance& inst) {
  const std::size_t m = inst.picks();
  const std::size_t end = m + 1;
  const std::size_t full = (std::size_t{1} << m) - 1;
  // togo[mask * m + last]: cheapest way to finish from pick `last` (bit
  // last-1 of mask) after visiting exactly `mask`.
  std::vector<double> togo((full + 1) * m, std::numeric_limits<double>::infinity());
  for (std::size_t last = 1; last <= m; ++last) togo[full * m + last - 1] = inst.cost(last, end);
  for (std::size_t mask = full; mask-- > 1;) {
    for (std::size_t last = 1; last <= m; ++last) {
      if (!(mask >> (last - 1) & 1U)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 1; j <= m; ++j) {
        if (mask >> (j - 1) & 1U) continue;
        best = std::min(best, inst.cost(last, j) + togo[(mask | std::size_t{1} << (j - 1)) * m + j - 1]);
      }
      togo[mask * m + last - 1] = best;
    }
  }
  double total = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= m; ++j) {
    total = std::min(total, inst.cost(0, j) + togo[(std::size_t{1} << (j - 1)) * m + j - 1]);
  }

  const auto by_label = picks_by_label(inst);
  std::vector<std::size_t> order{0};
  std::size_t mask = 0;
  double target = total;
  while (mask != full) {
    const std::size_t last = order.back();
    for (std::size_t j : by_label) {
      if (mask >> (j - 1) & 1U) continue;
      const std::size_t next = mask | std::size_t{1} << (j - 1);
      const double rest = togo[next * m + j - 1];
      if (inst.cost(last, j) + rest <= target + tolerance(total)) {
        order.push_back(j);
        mask = next;
        target = rest;
        break;
      }
    }
  }
  order.push_back(end);
  return from_indices(inst, order);
}

SrpSolution enumerate(const SrpInstance& inst) {
  const std::size_t k = inst.dimension();
  auto perm = picks_by_label(inst);
  auto sort_key = [&](std::size_t a, std::size_t b) { return inst.nodes[a] < inst.nodes[b]; };
  std::vector<std::size_t> order(k);
  order.front() = 0;
  order.back() = k - 1;
  auto cost_of = [&](const std::vector<std::size_t>& p) {
    std::copy(p.begin(), p.end(), order.begin() + 1);
    return index_cost(inst, order);
  };

  double best = std::numeric_limits<double>::infinity();
  auto p = perm;
  do {
    best = std::min(best, cost_of(p));
  } while (std::next_permutation(p.begin(), p.end(), sort_key));

  p = perm;
  do {
    if (cost_of(p) <= best + tolerance(best)) break;
  } while (std::next_permutation(p.begin(), p.end(), sort_key));
  std::copy(p.begin(), p.end(), order.begin() + 1);
  return from_indices(inst, order);
}

}  // namespace

SrpSolution solve_oracle(const SrpInstance& instance, OracleMethod method) {
  instance.validate();
  const std::size_t m = instance.picks();
  if (method == OracleMethod::held_karp) {
    if (m > kHeldKarpLimit) {
      throw SizeError("Held-Karp oracle limited to " + std::to_string(kHeldKarpLimit) + " picks");
    }
    return held_karp(instance);
  }
  if (m > kEnumerationLimit) {
    throw SizeError("enumeration oracle limited to " + std::to_string(kEnumerationLimit) + " picks");
  }
  return enumerate(instance);
}

SrpInstance build_instance(const StoreGraph& graph, std::span<const NodeId> locations,
                           RoutingBasis basis, std::span<const double> node_traffic, NodeId start,
                           NodeId end) {
  SrpInstance inst;
  std::vector<NodeId> picks(locations.begin(), locations.end());
  std::sort(picks.begin(), picks.end());
  if (std::adjacent_find(picks.begin(), picks.end()) != picks.end()) {
    throw ContractViolation("order lists a picking location twice");
  }
  inst.nodes.push_back(start);
  inst.nodes.insert(inst.nodes.end(), picks.begin(), picks.end());
  inst.nodes.push_back(end);
  const CostMatrix m = basis == RoutingBasis::arc_distance
                           ? distance_matrix(graph, inst.nodes)
                           : crowdedness_matrix(graph, node_traffic, inst.nodes);
  inst.costs = m.values;
  inst.validate();
  return inst;
}

SrpInstance build_instance(const StoreGraph& graph, std::span<const NodeId> locations,
                           RoutingBasis basis, std::span<const double> node_traffic) {
  return build_instance(graph, locations, basis, node_traffic, graph.start_depot(), graph.end_depot());
}

SrpInstance build_instance(const StoreGraph& graph, const OnlineOrder& order, RoutingBasis basis,
                           std::span<const double> node_traffic) {
  return build_instance(graph, order.picking_locations, basis, node_traffic);
}

Sequencer make_srp_sequencer(const StoreGraph& graph, RoutingBasis basis,
                             std::vector<double> node_traffic) {
  if (basis == RoutingBasis::arc_crowdedness) {
    // Same validation as the matrix builders.
    const NodeId probe = graph.start_depot();
    crowdedness_matrix(graph, node_traffic, std::span<const NodeId>(&probe, 1));
  }
  const auto table = std::make_shared<const RoutingTable>(
      graph, basis == RoutingBasis::arc_distance ? length_weight() : traffic_weight(std::move(node_traffic)));
  // Sequences are pure functions of (depot, location set), so repeated
  // orders are served from a bounded cache.
  struct Cache {
    std::mutex mutex;
    std::map<std::vector<NodeId>, std::vector<NodeId>> entries;
  };
  constexpr std::size_t kCacheLimit = 1 << 16;
  auto cache = std::make_shared<Cache>();
  return [table, cache](NodeId depot, std::span<const NodeId> locations) {
    if (locations.empty()) return std::vector<NodeId>{};
    SrpInstance inst;
    inst.nodes.push_back(depot);
    inst.nodes.insert(inst.nodes.end(), locations.begin(), locations.end());
    std::sort(inst.nodes.begin() + 1, inst.nodes.end());
    inst.nodes.push_back(depot);
    {
      std::lock_guard lock(cache->mutex);
      const auto it = cache->entries.find(inst.nodes);
      if (it != cache->entries.end()) return it->second;
    }
    const std::size_t k = inst.nodes.size();
    inst.costs.resize(k * k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) inst.costs[i * k + j] = table->cost(inst.nodes[i], inst.nodes[j]);
    }
    auto picks = solve_cutting_planes(inst).picks();
    std::lock_guard lock(cache->mutex);
    if (cache->entries.size() < kCacheLimit) cache->entries.emplace(std::move(inst.nodes), picks);
    return picks;
  };
}

}  // namespace diprp
