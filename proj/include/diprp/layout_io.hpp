#pragma once

#include <filesystem>
#include <string>

#include "diprp/store_graph.hpp"

namespace diprp {

// Layout files are JSON documents with three arrays:
//   nodes    [{id, x, y, kind}]
//   edges    [{u, v, length}]
//   products [{sku, node}]
// Loading rejects layouts that fail validate().

StoreGraph parse_layout(const std::string& json_text);
StoreGraph load_layout(const std::filesystem::path& file);
std::string layout_to_json(const StoreGraph& graph);
void save_layout(const StoreGraph& graph, const std::filesystem::path& file);

}  // namespace diprp
