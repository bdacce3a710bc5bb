#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "diprp/config.hpp"
#include "diprp/rng.hpp"
#include "diprp/store_graph.hpp"

namespace diprp {

enum class LayoutSize { tiny, small, medium, large, custom };

std::string_view to_string(LayoutSize size);
LayoutSize parse_layout_size(std::string_view text);

// Rectangular aisle grid: `aisles` vertical aisles crossed by `blocks` + 1
// cross aisles. Every aisle segment between two intersections holds
// `products_per_aisle` product nodes in series.
struct LayoutSpec {
  LayoutSize size = LayoutSize::tiny;
  int aisles = 3;
  int blocks = 2;
  int products_per_aisle = 2;
  double segment_length = 12.0;  // m between two intersections along an aisle
  double aisle_spacing = 4.0;    // m between neighbouring aisles

  static LayoutSpec for_size(LayoutSize size);
};

// Node numbering of generated layouts: 0 entrance (front-left), then the
// intersections row by row from the front, then the product nodes, then the
// cashier exit (front-middle), and finally the prep zone (back-right) as the
// end depot.
StoreGraph generate_layout(const LayoutSpec& spec, std::uint64_t seed);

struct ConcentrationProfile {
  Concentration mode = Concentration::uniform;
  std::vector<NodeId> products;  // sorted product nodes
  std::vector<double> weights;   // sums to 1
};

/// Sampling weights decay by `decay` per intersection hop away from the anchor
/// region of `mode`.
ConcentrationProfile make_profile(const StoreGraph& graph, Concentration mode, double decay = 0.5);

/// Distinct product nodes in random visiting order; the length is uniform on
/// [1, max_size] (capped by the number of products).
std::vector<NodeId> sample_shopping_list(const ConcentrationProfile& profile, Rng& rng,
                                         int max_size = 10);

/// Intersection-hop distance from `sources` (entering an intersection costs
/// one hop, any other node none).
std::vector<int> intersection_hops(const StoreGraph& graph, std::span<const NodeId> sources);

struct BenchmarkInstance {
  std::string name;
  LayoutSpec layout;
  EnvConfig config;
  StoreGraph graph;
};

/// The twelve synthetic instances: four layout sizes times three customer
/// concentrations, all with the standard store parameters.
std::vector<BenchmarkInstance> build_benchmark(std::uint64_t seed = 1);

}  // namespace diprp
