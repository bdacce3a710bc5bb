#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "diprp/rng.hpp"
#include "diprp/store_env.hpp"
#include "diprp/store_graph.hpp"

namespace diprp {

struct QState {
  NodeId current = 0;
  NodeId target = 0;

  auto operator<=>(const QState&) const = default;
};

// Lookup table (current, target) -> action values. Rows are created on first
// write with optimistic values drawn uniformly from [init_lo, init_hi]; the
// draw is a hash of the seed, state and action, so it does not depend on the
// order in which states are visited.
class QTable {
 public:
  struct Row {
    std::vector<NodeId> actions;  // sorted
    std::vector<double> values;
  };

  QTable() = default;
  QTable(double init_lo, double init_hi, std::uint64_t init_seed = 0);

  double init_lo() const { return init_lo_; }
  double init_hi() const { return init_hi_; }

  std::size_t size() const { return rows_.size(); }
  std::size_t entries() const;
  bool contains(const QState& s) const { return rows_.count(key(s)) != 0; }
  const Row* find(const QState& s) const;
  Row* find(const QState& s);

  /// Row of `s`, created from `legal` when missing. Throws ContractViolation
  /// when an existing row has a different action set.
  Row& row(const QState& s, std::span<const NodeId> legal);

  double value(const QState& s, NodeId action) const;
  void set(const QState& s, std::span<const NodeId> legal, NodeId action, double value);

  /// Value a fresh row would start with.
  double initial_value(const QState& s, NodeId action) const;

  /// max_a Q(s, a), using initial values for an unseen state.
  double max_value(const QState& s, std::span<const NodeId> legal) const;

  /// All rows sorted by state.
  std::vector<std::pair<QState, const Row*>> sorted_rows() const;

  bool operator==(const QTable& other) const;

 private:
  static std::uint64_t key(const QState& s) { return std::uint64_t{s.current} << 32 | s.target; }

  double init_lo_ = 0.0;
  double init_hi_ = 200.0;
  std::uint64_t init_seed_ = 0;
  std::unordered_map<std::uint64_t, Row> rows_;
};

struct TrainConfig {
  double alpha = 0.97;
  double gamma = 0.9;
  double epsilon = 0.01;
  std::size_t episodes = 1000;
  double convergence_threshold = 1e-3;  // on the largest |dQ| of an episode
  std::optional<double> eval_epsilon;   // defaults to epsilon
  std::optional<double> init_hi;        // defaults to twice the pick reward

  double evaluation_epsilon() const { return eval_epsilon.value_or(epsilon); }
  void validate() const;
};

/// Epsilon-greedy choice; greedy ties go to the smallest node id. Creates the
/// row of `s` when missing.
NodeId select_action(QTable& table, const QState& s, std::span<const NodeId> legal, double epsilon,
                     Rng& rng);

/// Read-only variant for trained tables; an unseen state yields a uniform
/// random legal action.
NodeId select_action(const QTable& table, const QState& s, std::span<const NodeId> legal,
                     double epsilon, Rng& rng);

/// One temporal-difference step on Q(s, a). The next state's value is taken
/// as zero when `terminal`. Returns the absolute change.
double update(QTable& table, const QState& s, NodeId a, double reward, const QState& next,
              std::span<const NodeId> legal_next, double alpha, double gamma, bool terminal = false);

struct TrainResult {
  QTable table;
  std::vector<double> rewards;  // cumulative reward per episode
  std::vector<EpisodeTotals> totals;
  bool converged = false;
};

/// Runs episodes on `env`, resetting it with per-episode seeds derived from
/// `seed`. Stops early once an episode changes no value by more than the
/// convergence threshold.
TrainResult train(StoreEnv& env, const TrainConfig& config, std::uint64_t seed);

struct GreedyPath {
  std::vector<NodeId> moves;  // nodes entered, excluding `from`
  bool truncated = false;     // step cap reached before the target
};

GreedyPath greedy_path(const QTable& table, const StoreGraph& graph, NodeId from, NodeId target,
                       double epsilon, Rng& rng, std::size_t step_cap);

/// CSV `current,target,action,value`, sorted, values with 17 significant digits.
void save_qtable(const QTable& table, const std::filesystem::path& file);
std::string qtable_to_csv(const QTable& table);
QTable load_qtable(const std::filesystem::path& file);
QTable parse_qtable(const std::string& csv);

}  // namespace diprp
