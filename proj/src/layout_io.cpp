#include "diprp/layout_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "diprp/errors.hpp"

namespace diprp {

using nlohmann::json;

StoreGraph parse_layout(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("layout is not valid JSON: ") + e.what());
  }
  std::vector<StoreNode> nodes;
  std::vector<StoreEdge> edges;
  std::vector<Product> products;
  try {
    for (const auto& n : doc.at("nodes")) {
      nodes.push_back({n.at("id").get<NodeId>(), parse_node_kind(n.at("kind").get<std::string>()),
                       n.value("x", 0.0), n.value("y", 0.0)});
    }
    for (const auto& e : doc.at("edges")) {
      edges.push_back({e.at("u").get<NodeId>(), e.at("v").get<NodeId>(), e.at("length").get<double>()});
    }
    if (doc.contains("products")) {
      for (const auto& p : doc.at("products")) {
        const auto& sku = p.at("sku");
        products.push_back({sku.is_string() ? sku.get<std::string>() : sku.dump(),
                            p.at("node").get<NodeId>()});
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed layout: ") + e.what());
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const StoreNode& a, const StoreNode& b) { return a.id < b.id; });
  StoreGraph graph(std::move(nodes), std::move(edges), std::move(products));
  const auto report = validate(graph);
  if (!report.empty()) {
    std::string msg = "invalid layout:";
    for (const auto& r : report) msg += "\n  " + r;
    throw ConfigError(msg);
  }
  return graph;
}

StoreGraph load_layout(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open layout file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_layout(buf.str());
}

std::string layout_to_json(const StoreGraph& graph) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : graph.nodes()) {
    doc["nodes"].push_back({{"id", n.id}, {"x", n.x}, {"y", n.y}, {"kind", to_string(n.kind)}});
  }
  doc["edges"] = json::array();
  for (const auto& e : graph.edges()) {
    doc["edges"].push_back({{"u", e.u}, {"v", e.v}, {"length", e.length}});
  }
  doc["products"] = json::array();
  for (const auto& p : graph.products()) {
    doc["products"].push_back({{"sku", p.sku}, {"node", p.node}});
  }
  return doc.dump(1);
}

void save_layout(const StoreGraph& graph, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write layout file " + file.string());
  out << layout_to_json(graph) << '\n';
}

}  // namespace diprp
