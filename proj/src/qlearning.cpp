#include "diprp/qlearning.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "diprp/errors.hpp"

namespace diprp {

QTable::QTable(double init_lo, double init_hi, std::uint64_t init_seed)
    : init_lo_(init_lo), init_hi_(init_hi), init_seed_(init_seed) {
  if (!(init_lo <= init_hi) || !std::isfinite(init_lo) || !std::isfinite(init_hi)) {
    throw ConfigError("Q-table init range must be finite with lo <= hi");
  }
}

std::size_t QTable::entries() const {
  std::size_t total = 0;
  for (const auto& [k, row] : rows_) total += row.actions.size();
  return total;
}

const QTable::Row* QTable::find(const QState& s) const {
  const auto it = rows_.find(key(s));
  return it == rows_.end() ? nullptr : &it->second;
}

QTable::Row* QTable::find(const QState& s) {
  const auto it = rows_.find(key(s));
  return it == rows_.end() ? nullptr : &it->second;
}

double QTable::initial_value(const QState& s, NodeId action) const {
  const std::uint64_t h = splitmix64(init_seed_ ^ splitmix64(key(s) ^ splitmix64(action)));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return init_lo_ + (init_hi_ - init_lo_) * u;
}

QTable::Row& QTable::row(const QState& s, std::span<const NodeId> legal) {
  auto [it, inserted] = rows_.try_emplace(key(s));
  Row& r = it->second;
  if (inserted) {
    r.actions.assign(legal.begin(), legal.end());
    std::sort(r.actions.begin(), r.actions.end());
    r.actions.erase(std::unique(r.actions.begin(), r.actions.end()), r.actions.end());
    for (NodeId a : r.actions) r.values.push_back(initial_value(s, a));
  } else if (!std::equal(r.actions.begin(), r.actions.end(), legal.begin(), legal.end())) {
    throw ContractViolation("legal actions differ from the stored row");
  }
  return r;
}

namespace {

std::size_t action_index(const QTable::Row& row, NodeId action) {
  const auto it = std::lower_bound(row.actions.begin(), row.actions.end(), action);
  if (it == row.actions.end() || *it != action) {
    throw ContractViolation("action " + std::to_string(action) + " is not legal in this state");
  }
  return static_cast<std::size_t>(it - row.actions.begin());
}

void require_actions(std::span<const NodeId> legal) {
  if (legal.empty()) throw ContractViolation("no legal actions");
}

}  // namespace

double QTable::value(const QState& s, NodeId action) const {
  const Row* r = find(s);
  if (!r) throw ContractViolation("state not in Q-table");
  return r->values[action_index(*r, action)];
}

void QTable::set(const QState& s, std::span<const NodeId> legal, NodeId action, double value) {
  Row& r = row(s, legal);
  r.values[action_index(r, action)] = value;
}

double QTable::max_value(const QState& s, std::span<const NodeId> legal) const {
  require_actions(legal);
  double best = -std::numeric_limits<double>::infinity();
  if (const Row* r = find(s)) {
    for (double v : r->values) best = std::max(best, v);
  } else {
    for (NodeId a : legal) best = std::max(best, initial_value(s, a));
  }
  return best;
}

std::vector<std::pair<QState, const QTable::Row*>> QTable::sorted_rows() const {
  std::vector<std::pair<QState, const Row*>> out;
  out.reserve(rows_.size());
  for (const auto& [k, row] : rows_) {
    out.push_back({QState{static_cast<NodeId>(k >> 32), static_cast<NodeId>(k & 0xffffffffU)}, &row});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

bool QTable::operator==(const QTable& other) const {
  if (rows_.size() != other.rows_.size()) return false;
  for (const auto& [k, row] : rows_) {
    const auto it = other.rows_.find(k);
    if (it == other.rows_.end() || it->second.actions != row.actions || it->second.values != row.values) {
      return false;
    }
  }
  return true;
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  const double e = evaluation_epsilon();
  if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("evaluation epsilon must lie in [0, 1]");
  if (!(convergence_threshold >= 0.0)) throw ConfigError("convergence threshold must be >= 0");
  if (init_hi && !(*init_hi >= 0.0)) throw ConfigError("init_hi must be >= 0");
}

namespace {

NodeId argmax(const QTable::Row& row, std::span<const NodeId> legal) {
  NodeId best = legal.front();
  double best_value = -std::numeric_limits<double>::infinity();
  for (NodeId a : legal) {
    const double v = row.values[action_index(row, a)];
    if (v > best_value || (v == best_value && a < best)) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

bool explore(double epsilon, Rng& rng) { return epsilon > 0.0 && uniform01(rng) < epsilon; }

}  // namespace

NodeId select_action(QTable& table, const QState& s, std::span<const NodeId> legal, double epsilon,
                     Rng& rng) {
  require_actions(legal);
  const auto& row = table.row(s, legal);
  if (legal.size() == 1) return legal.front();
  if (explore(epsilon, rng)) return legal[uniform_index(rng, legal.size())];
  return argmax(row, legal);
}

NodeId select_action(const QTable& table, const QState& s, std::span<const NodeId> legal,
                     double epsilon, Rng& rng) {
  require_actions(legal);
  if (legal.size() == 1) return legal.front();
  const auto* row = table.find(s);
  if (!row || explore(epsilon, rng)) return legal[uniform_index(rng, legal.size())];
  return argmax(*row, legal);
}

double update(QTable& table, const QState& s, NodeId a, double reward, const QState& next,
              std::span<const NodeId> legal_next, double alpha, double gamma, bool terminal) {
  const double future = terminal ? 0.0 : table.max_value(next, legal_next);
  auto* row = table.find(s);
  if (!row) throw ContractViolation("update on a state that was never selected");
  double& q = row->values[action_index(*row, a)];
  const double before = q;
  q += alpha * (reward + gamma * future - q);
  return std::abs(q - before);
}

TrainResult train(StoreEnv& env, const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& graph = env.graph();
  const double hi = config.init_hi.value_or(2.0 * env.model().config().reward_weights.pick);
  TrainResult result{QTable(0.0, hi, derive_seed(seed, Stream::table_init)), {}, {}, false};

  std::vector<std::vector<NodeId>> legal(graph.size());
  for (NodeId v = 0; v < graph.size(); ++v) {
    for (const auto& nb : graph.neighbors(v)) legal[v].push_back(nb.node);
  }

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    env.reset(derive_seed(seed, Stream::episode, ep));
    Rng rng = make_rng(seed, Stream::exploration, ep);
    double largest = 0.0;
    std::size_t updates = 0;
    while (env.await_decision()) {
      ++updates;
      const QState s{env.picker_node(), *env.target()};
      const NodeId a = select_action(result.table, s, legal[s.current], config.epsilon, rng);
      const StepOutcome out = env.step(a);
      const QState next{out.picker_node, out.target_node};
      const bool terminal = out.order_completed || out.done;
      largest = std::max(largest, update(result.table, s, a, out.reward, next, legal[next.current],
                                         config.alpha, config.gamma, terminal));
    }
    result.rewards.push_back(env.totals().reward);
    result.totals.push_back(env.totals());
    if (updates > 0 && largest < config.convergence_threshold) {
      result.converged = true;
      break;
    }
  }
  return result;
}

GreedyPath greedy_path(const QTable& table, const StoreGraph& graph, NodeId from, NodeId target,
                       double epsilon, Rng& rng, std::size_t step_cap) {
  if (step_cap == 0) throw ContractViolation("step_cap must be positive");
  if (!graph.contains(from) || !graph.contains(target)) throw ContractViolation("node not in graph");
  GreedyPath path;
  std::vector<NodeId> legal;
  NodeId at = from;
  while (at != target) {
    if (path.moves.size() == step_cap) {
      path.truncated = true;
      break;
    }
    legal.clear();
    for (const auto& nb : graph.neighbors(at)) legal.push_back(nb.node);
    at = select_action(table, QState{at, target}, legal, epsilon, rng);
    path.moves.push_back(at);
  }
  return path;
}

std::string qtable_to_csv(const QTable& table) {
  std::string out = "current,target,action,value\n";
  char buf[96];
  for (const auto& [s, row] : table.sorted_rows()) {
    for (std::size_t i = 0; i < row->actions.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%u,%u,%u,%.17g\n", s.current, s.target, row->actions[i],
                    row->values[i]);
      out += buf;
    }
  }
  return out;
}

void save_qtable(const QTable& table, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << qtable_to_csv(table);
}

namespace {

NodeId parse_id(const std::string& field, std::size_t line) {
  if (field.empty() || field.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError("line " + std::to_string(line) + ": bad node id '" + field + "'");
  }
  errno = 0;
  const unsigned long long v = std::strtoull(field.c_str(), nullptr, 10);
  if (errno != 0 || v > 0xffffffffULL) {
    throw ParseError("line " + std::to_string(line) + ": node id out of range");
  }
  return static_cast<NodeId>(v);
}

double parse_value(const std::string& field, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || *end != '\0' || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ": bad value '" + field + "'");
  }
  return v;
}

}  // namespace

QTable parse_qtable(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty Q-table file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "current,target,action,value") throw ParseError("unexpected Q-table header '" + line + "'");

  std::map<QState, std::map<NodeId, double>> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() != 4) throw ParseError("line " + std::to_string(number) + ": expected 4 fields");
    const QState s{parse_id(fields[0], number), parse_id(fields[1], number)};
    const NodeId a = parse_id(fields[2], number);
    if (!rows[s].emplace(a, parse_value(fields[3], number)).second) {
      throw ParseError("line " + std::to_string(number) + ": duplicate state-action row");
    }
  }

  QTable table;
  std::vector<NodeId> actions;
  for (const auto& [s, values] : rows) {
    actions.clear();
    for (const auto& [a, v] : values) actions.push_back(a);
    for (const auto& [a, v] : values) table.set(s, actions, a, v);
  }
  return table;
}

QTable load_qtable(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("cannot read " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_qtable(buf.str());
}

}  // namespace diprp
