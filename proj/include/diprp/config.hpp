#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace diprp {

/// Where customer shopping lists concentrate; `uniform` is used for online orders.
enum class Concentration { entrance, middle, back, uniform };

std::string_view to_string(Concentration c);
Concentration parse_concentration(std::string_view text);

// Weights of the four per-step reward components. The reward of an arc step is
//   -step*steps - co_located*same_node_customers - visible*adjacent_customers + pick*picks
struct RewardWeights {
  double step = 1.0;
  double co_located = 3.0;
  double visible = 1.0;
  double pick = 100.0;
};

struct EnvConfig {
  double lambda_store = 2.0;   // customers per period
  double lambda_online = 0.2;  // online orders per period
  double period_s = 60.0;      // length of one arrival period
  double open_time_s = 8.0 * 3600.0;
  int store_capacity = 50;
  int node_capacity = 5;
  bool enforce_node_capacity = true;
  double customer_speed = 1.0;  // m/s
  double picker_speed = 1.0;    // m/s
  double customer_service_time = 30.0;  // s per product
  double picker_service_time = 30.0;    // s per product
  int max_list_size = 10;   // customer shopping lists
  int max_order_size = 10;  // online orders
  double overtime_limit_s = 3600.0;  // hard stop after closing for runaway episodes
  double traffic_sample_s = 10.0;    // sampling step of traffic statistics
  Concentration concentration = Concentration::entrance;
  RewardWeights reward_weights;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

EnvConfig parse_config(const std::string& json_text);
EnvConfig load_config(const std::filesystem::path& file);
std::string config_to_json(const EnvConfig& config);

}  // namespace diprp
