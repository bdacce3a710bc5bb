#include "diprp/instance_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>

#include "diprp/errors.hpp"

namespace diprp {

std::string_view to_string(LayoutSize size) {
  switch (size) {
    case LayoutSize::tiny: return "tiny";
    case LayoutSize::small: return "small";
    case LayoutSize::medium: return "medium";
    case LayoutSize::large: return "large";
    case LayoutSize::custom: return "custom";
  }
  return "custom";
}

LayoutSize parse_layout_size(std::string_view text) {
  if (text == "tiny") return LayoutSize::tiny;
  if (text == "small") return LayoutSize::small;
  if (text == "medium") return LayoutSize::medium;
  if (text == "large") return LayoutSize::large;
  throw ConfigError("unknown layout size '" + std::string(text) + "'");
}

LayoutSpec LayoutSpec::for_size(LayoutSize size) {
  LayoutSpec spec;
  spec.size = size;
  switch (size) {
    case LayoutSize::tiny: spec.aisles = 3; spec.blocks = 2; break;
    case LayoutSize::small: spec.aisles = 4; spec.blocks = 3; break;
    case LayoutSize::medium: spec.aisles = 6; spec.blocks = 4; break;
    case LayoutSize::large: spec.aisles = 8; spec.blocks = 6; break;
    case LayoutSize::custom: break;
  }
  return spec;
}

StoreGraph generate_layout(const LayoutSpec& spec, std::uint64_t seed) {
  if (spec.aisles < 1 || spec.blocks < 1 || spec.products_per_aisle < 1) {
    throw ConfigError("layout needs at least one aisle, one block and one product per aisle");
  }
  if (!(spec.segment_length > 0.0) || !(spec.aisle_spacing > 0.0)) {
    throw ConfigError("layout distances must be positive");
  }
  const auto A = static_cast<NodeId>(spec.aisles);
  const auto B = static_cast<NodeId>(spec.blocks);
  const auto P = static_cast<NodeId>(spec.products_per_aisle);
  const double dx = spec.aisle_spacing;
  const double dy = spec.segment_length;
  const double piece = dy / static_cast<double>(P + 1);

  auto intersection = [&](NodeId i, NodeId j) { return 1 + j * A + i; };
  const NodeId product_base = 1 + A * (B + 1);
  auto product = [&](NodeId i, NodeId j, NodeId k) { return product_base + (j * A + i) * P + k; };
  const NodeId cashier = product_base + A * B * P;
  const NodeId prep = cashier + 1;

  std::vector<StoreNode> nodes(prep + 1);
  std::vector<StoreEdge> edges;
  nodes[0] = {0, NodeKind::entrance, -dx, 0.0};
  for (NodeId j = 0; j <= B; ++j) {
    for (NodeId i = 0; i < A; ++i) {
      const NodeId id = intersection(i, j);
      nodes[id] = {id, NodeKind::intersection, i * dx, j * dy};
      if (i + 1 < A) edges.push_back({id, intersection(i + 1, j), dx});
    }
  }
  for (NodeId j = 0; j < B; ++j) {
    for (NodeId i = 0; i < A; ++i) {
      NodeId prev = intersection(i, j);
      for (NodeId k = 0; k < P; ++k) {
        const NodeId id = product(i, j, k);
        nodes[id] = {id, NodeKind::product_position, i * dx, j * dy + (k + 1) * piece};
        edges.push_back({prev, id, piece});
        prev = id;
      }
      edges.push_back({prev, intersection(i, j + 1), piece});
    }
  }
  nodes[cashier] = {cashier, NodeKind::exit, (A / 2) * dx, -dx};
  edges.push_back({0, intersection(0, 0), dx});
  edges.push_back({intersection(A / 2, 0), cashier, dx});
  nodes[prep] = {prep, NodeKind::prep_zone, A * dx, B * dy};
  edges.push_back({intersection(A - 1, B), prep, dx});

  // The seed only decides which SKU label sits on which shelf.
  std::vector<NodeId> shelf(A * B * P);
  std::iota(shelf.begin(), shelf.end(), product_base);
  Rng rng = make_rng(seed, Stream::layout);
  for (std::size_t i = shelf.size(); i > 1; --i) std::swap(shelf[i - 1], shelf[uniform_index(rng, i)]);
  std::vector<Product> products;
  for (std::size_t s = 0; s < shelf.size(); ++s) {
    char sku[32];
    std::snprintf(sku, sizeof sku, "SKU-%04zu", s + 1);
    products.push_back({sku, shelf[s]});
  }
  std::sort(products.begin(), products.end(),
            [](const Product& a, const Product& b) { return a.node < b.node; });
  return StoreGraph(std::move(nodes), std::move(edges), std::move(products));
}

std::vector<int> intersection_hops(const StoreGraph& graph, std::span<const NodeId> sources) {
  constexpr int kUnreached = std::numeric_limits<int>::max();
  std::vector<int> dist(graph.size(), kUnreached);
  std::deque<NodeId> open;
  for (NodeId s : sources) {
    dist.at(s) = 0;
    open.push_back(s);
  }
  while (!open.empty()) {
    const NodeId x = open.front();
    open.pop_front();
    for (const auto& nb : graph.neighbors(x)) {
      const int step = graph.node(nb.node).kind == NodeKind::intersection ? 1 : 0;
      if (dist[x] + step < dist[nb.node]) {
        dist[nb.node] = dist[x] + step;
        if (step == 0) {
          open.push_front(nb.node);
        } else {
          open.push_back(nb.node);
        }
      }
    }
  }
  return dist;
}

ConcentrationProfile make_profile(const StoreGraph& graph, Concentration mode, double decay) {
  ConcentrationProfile profile;
  profile.mode = mode;
  profile.products = graph.product_nodes();
  if (profile.products.empty()) throw ConfigError("layout has no product nodes");
  const std::size_t n = profile.products.size();
  if (mode == Concentration::uniform) {
    profile.weights.assign(n, 1.0 / static_cast<double>(n));
    return profile;
  }

  std::vector<NodeId> anchors;
  if (mode == Concentration::entrance) {
    anchors.push_back(graph.start_depot());
  } else {
    const NodeId entrance = graph.start_depot();
    const auto from_entrance = intersection_hops(graph, std::span<const NodeId>(&entrance, 1));
    std::vector<NodeId> pool;
    for (const auto& node : graph.nodes()) {
      if (node.kind == NodeKind::intersection) pool.push_back(node.id);
    }
    if (pool.empty()) pool = profile.products;
    int lo = std::numeric_limits<int>::max();
    int hi = 0;
    for (NodeId id : pool) {
      lo = std::min(lo, from_entrance[id]);
      hi = std::max(hi, from_entrance[id]);
    }
    const int wanted = mode == Concentration::back ? hi : (lo + hi) / 2;
    for (NodeId id : pool) {
      if (from_entrance[id] == wanted) anchors.push_back(id);
    }
  }
  const auto hops = intersection_hops(graph, anchors);
  double total = 0.0;
  for (NodeId p : profile.products) {
    const double w = std::pow(decay, hops[p]);
    profile.weights.push_back(w);
    total += w;
  }
  for (double& w : profile.weights) w /= total;
  return profile;
}

std::vector<NodeId> sample_shopping_list(const ConcentrationProfile& profile, Rng& rng,
                                         int max_size) {
  if (profile.products.empty()) throw ContractViolation("empty product set");
  std::vector<double> weights = profile.weights;
  const auto available = static_cast<std::size_t>(
      std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
  const std::size_t wanted = 1 + uniform_index(rng, static_cast<std::size_t>(std::max(max_size, 1)));
  const std::size_t size = std::min(wanted, available);

  std::vector<NodeId> list;
  list.reserve(size);
  while (list.size() < size) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = uniform01(rng) * total;
    std::size_t pick = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      pick = i;
      if (u < weights[i]) break;
      u -= weights[i];
    }
    list.push_back(profile.products[pick]);
    weights[pick] = 0.0;
  }
  for (std::size_t i = list.size(); i > 1; --i) std::swap(list[i - 1], list[uniform_index(rng, i)]);
  return list;
}

std::vector<BenchmarkInstance> build_benchmark(std::uint64_t seed) {
  std::vector<BenchmarkInstance> out;
  for (LayoutSize size : {LayoutSize::tiny, LayoutSize::small, LayoutSize::medium, LayoutSize::large}) {
    const LayoutSpec spec = LayoutSpec::for_size(size);
    const StoreGraph graph = generate_layout(spec, seed);
    for (Concentration c : {Concentration::entrance, Concentration::middle, Concentration::back}) {
      EnvConfig cfg;  // defaults are the standard synthetic store parameters
      cfg.concentration = c;
      out.push_back({std::string(to_string(size)) + "-" + std::string(to_string(c)), spec, cfg, graph});
    }
  }
  return out;
}

}  // namespace diprp
