#include "diprp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "diprp/errors.hpp"

namespace diprp {

using nlohmann::json;

std::string_view to_string(Concentration c) {
  switch (c) {
    case Concentration::entrance: return "entrance";
    case Concentration::middle: return "middle";
    case Concentration::back: return "back";
    case Concentration::uniform: return "uniform";
  }
  return "uniform";
}

Concentration parse_concentration(std::string_view text) {
  if (text == "entrance" || text == "near") return Concentration::entrance;
  if (text == "middle") return Concentration::middle;
  if (text == "back" || text == "far") return Concentration::back;
  if (text == "uniform") return Concentration::uniform;
  throw ConfigError("unknown concentration '" + std::string(text) + "'");
}

void EnvConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (!(lambda_store >= 0.0)) fail("lambda_store must be >= 0");
  if (!(lambda_online >= 0.0)) fail("lambda_online must be >= 0");
  if (!(period_s > 0.0)) fail("period_s must be > 0");
  if (!(open_time_s > 0.0)) fail("open_time_s must be > 0");
  if (store_capacity < 1) fail("store_capacity must be >= 1");
  if (node_capacity < 1) fail("node_capacity must be >= 1");
  if (!(customer_speed > 0.0) || !(picker_speed > 0.0)) fail("speeds must be > 0");
  if (!(customer_service_time >= 0.0) || !(picker_service_time >= 0.0)) {
    fail("service times must be >= 0");
  }
  if (max_list_size < 1 || max_order_size < 1) fail("list and order sizes must be >= 1");
  if (!(overtime_limit_s >= 0.0)) fail("overtime_limit_s must be >= 0");
  if (!(traffic_sample_s > 0.0)) fail("traffic_sample_s must be > 0");
  const auto& w = reward_weights;
  if (!(w.step >= 0.0 && w.co_located >= 0.0 && w.visible >= 0.0 && w.pick >= 0.0)) {
    fail("reward weights must be non-negative");
  }
}

namespace {

template <typename T>
void read(const json& doc, const char* key, T& field, std::set<std::string>& used) {
  if (auto it = doc.find(key); it != doc.end()) {
    field = it->get<T>();
    used.insert(key);
  }
}

}  // namespace

EnvConfig parse_config(const std::string& json_text) {
  EnvConfig cfg;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object()) throw ParseError("config must be a JSON object");
    std::set<std::string> used;
    read(doc, "lambda_store", cfg.lambda_store, used);
    read(doc, "lambda_online", cfg.lambda_online, used);
    read(doc, "period_s", cfg.period_s, used);
    read(doc, "open_time_s", cfg.open_time_s, used);
    read(doc, "store_capacity", cfg.store_capacity, used);
    read(doc, "node_capacity", cfg.node_capacity, used);
    read(doc, "enforce_node_capacity", cfg.enforce_node_capacity, used);
    read(doc, "customer_speed", cfg.customer_speed, used);
    read(doc, "picker_speed", cfg.picker_speed, used);
    read(doc, "customer_service_time", cfg.customer_service_time, used);
    read(doc, "picker_service_time", cfg.picker_service_time, used);
    read(doc, "max_list_size", cfg.max_list_size, used);
    read(doc, "max_order_size", cfg.max_order_size, used);
    read(doc, "overtime_limit_s", cfg.overtime_limit_s, used);
    read(doc, "traffic_sample_s", cfg.traffic_sample_s, used);
    if (auto it = doc.find("concentration"); it != doc.end()) {
      cfg.concentration = parse_concentration(it->get<std::string>());
      used.insert("concentration");
    }
    if (auto it = doc.find("reward_weights"); it != doc.end()) {
      std::set<std::string> inner;
      read(*it, "step", cfg.reward_weights.step, inner);
      read(*it, "co_located", cfg.reward_weights.co_located, inner);
      read(*it, "visible", cfg.reward_weights.visible, inner);
      read(*it, "pick", cfg.reward_weights.pick, inner);
      for (const auto& [key, _] : it->items()) {
        if (!inner.count(key)) throw ParseError("unknown reward weight '" + key + "'");
      }
      used.insert("reward_weights");
    }
    for (const auto& [key, _] : doc.items()) {
      if (!used.count(key)) throw ParseError("unknown config field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

EnvConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const EnvConfig& c) {
  json doc{{"lambda_store", c.lambda_store},
           {"lambda_online", c.lambda_online},
           {"period_s", c.period_s},
           {"open_time_s", c.open_time_s},
           {"store_capacity", c.store_capacity},
           {"node_capacity", c.node_capacity},
           {"enforce_node_capacity", c.enforce_node_capacity},
           {"customer_speed", c.customer_speed},
           {"picker_speed", c.picker_speed},
           {"customer_service_time", c.customer_service_time},
           {"picker_service_time", c.picker_service_time},
           {"max_list_size", c.max_list_size},
           {"max_order_size", c.max_order_size},
           {"overtime_limit_s", c.overtime_limit_s},
           {"traffic_sample_s", c.traffic_sample_s},
           {"concentration", to_string(c.concentration)},
           {"reward_weights",
            {{"step", c.reward_weights.step},
             {"co_located", c.reward_weights.co_located},
             {"visible", c.reward_weights.visible},
             {"pick", c.reward_weights.pick}}}};
  return doc.dump(2);
}

}  // namespace diprp
