#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diprp/config.hpp"
#include "diprp/instance_gen.hpp"
#include "diprp/rng.hpp"
#include "diprp/store_graph.hpp"

namespace diprp {

struct PathStop {
  NodeId node = 0;
  bool service = false;  // the customer picks a product here
  double leg = 0.0;      // length of the edge walked to reach this stop
};

struct Customer {
  std::uint64_t id = 0;
  std::vector<PathStop> path;  // entrance ... exit
  std::size_t cursor = 0;      // index of the stop the customer occupies
  double busy_until = 0.0;     // when it is ready to leave the current stop
  bool waiting = false;        // blocked by a full next node

  NodeId current_node() const { return path[cursor].node; }
};

struct OnlineOrder {
  std::uint64_t id = 0;
  std::vector<NodeId> picking_locations;  // sorted, distinct
  double arrival_time = 0.0;
  std::vector<NodeId> sequence;  // empty until assigned
};

/// Customer counts the picker sees from its node.
struct Observation {
  NodeId picker_node = 0;
  NodeId target_node = 0;
  int co_located = 0;
  std::vector<std::pair<NodeId, int>> neighbor_customers;  // sorted by node

  int visible() const;
  int customers_at(NodeId neighbor) const;
};

/// Reward components of one arc step.
struct StepFeatures {
  int steps = 0;       // arcs traversed since the last epoch
  int co_located = 0;  // customers on the picker's new node
  int visible = 0;     // customers on nodes adjacent to it
  int picks = 0;       // products picked on arrival
};

double assemble_reward(const RewardWeights& w, const StepFeatures& f);

struct StepOutcome {
  NodeId picker_node = 0;
  NodeId target_node = 0;  // next target after this step (prep zone once all picks are done)
  StepFeatures features;
  double reward = 0.0;
  bool order_completed = false;
  bool done = false;
  bool truncated = false;  // episode stopped by the overtime limit
};

struct TraceRow {
  std::uint64_t epoch = 0;
  double t = 0.0;  // clock when the decision was taken
  NodeId node = 0;
  NodeId action = 0;
  StepFeatures features;
  double reward = 0.0;
  bool order_done = false;
};

struct EpisodeTotals {
  double reward = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t co_located = 0;
  std::uint64_t visible = 0;
  std::uint64_t products = 0;
  std::uint64_t orders = 0;

  std::uint64_t encounters() const { return co_located + visible; }
};

/// Sum of per-step rewards of an episode trace.
double cumulative_reward(std::span<const TraceRow> trace);

/// Orders the picking locations of one order starting and ending at `depot`.
using Sequencer = std::function<std::vector<NodeId>(NodeId depot, std::span<const NodeId> locations)>;

/// Visits the locations in ascending node order.
Sequencer identity_sequencer();

// Immutable store description shared by every environment of one instance:
// graph, parameters, distance routes and the customer/order samplers.
class StoreModel {
 public:
  StoreModel(StoreGraph graph, EnvConfig config);

  const StoreGraph& graph() const { return graph_; }
  const EnvConfig& config() const { return config_; }
  const RoutingTable& distance_routes() const { return routes_; }
  const ConcentrationProfile& customer_profile() const { return customer_profile_; }
  const ConcentrationProfile& order_profile() const { return order_profile_; }
  NodeId prep_zone() const { return prep_; }
  const std::vector<NodeId>& exits() const { return exits_; }
  bool capped(NodeId node) const { return capped_[node] != 0; }

  /// Entrance -> list items in order -> exit, following shortest paths.
  std::vector<PathStop> shopping_path(std::span<const NodeId> list, NodeId exit) const;

 private:
  StoreGraph graph_;
  EnvConfig config_;
  RoutingTable routes_;
  ConcentrationProfile customer_profile_;
  ConcentrationProfile order_profile_;
  NodeId prep_ = 0;
  std::vector<NodeId> exits_;
  std::vector<char> capped_;
};

// Discrete-event store: customers walk their shopping paths, orders arrive,
// and the picker moves one arc per decision epoch. Customer and order streams
// depend only on the reset seed, never on the picker, so different policies
// replay identical stores.
class StoreEnv {
 public:
  StoreEnv(std::shared_ptr<const StoreModel> model, Sequencer sequencer = identity_sequencer());

  void reset(std::uint64_t seed);

  /// Draws customer and order arrivals for the next `dt` seconds of the
  /// arrival horizon (Poisson counts, uniform times within the window).
  void spawn_arrivals(double dt);
  /// Moves already-scheduled customers forward by `dt`; no new arrivals.
  void advance_customers(double dt);
  /// Schedules one customer with the given list to enter at time `at`.
  void admit_customer(std::span<const NodeId> list, NodeId exit, double at);

  /// Pops the oldest queued order and sequences it. No-op (false) when the
  /// queue is empty. Requires the picker to be idle at the prep zone.
  bool assign_next_order(const Sequencer& sequencer);
  bool assign_next_order() { return assign_next_order(sequencer_); }

  /// Idles at the prep zone until an order is active. Returns false once the
  /// episode is over.
  bool await_decision();

  StepOutcome step(NodeId action);
  Observation observe() const;

  const StoreModel& model() const { return *model_; }
  const StoreGraph& graph() const { return model_->graph(); }
  double clock() const { return clock_; }
  NodeId picker_node() const { return picker_; }
  std::optional<NodeId> target() const;
  const std::optional<OnlineOrder>& active_order() const { return active_; }
  /// Picking status of the active order's sequence positions.
  const std::vector<char>& picking_status() const { return status_; }
  const std::deque<OnlineOrder>& order_queue() const { return queue_; }
  bool done() const { return done_; }
  bool truncated() const { return truncated_; }
  const EpisodeTotals& totals() const { return totals_; }

  int customers_at(NodeId node) const { return counts_[node]; }
  std::size_t customers_in_store() const { return in_store_; }
  std::uint64_t customers_admitted() const { return admitted_; }
  std::uint64_t customers_rejected() const { return rejected_; }
  std::uint64_t customers_departed() const { return departed_; }
  std::uint64_t arrivals_drawn() const { return arrivals_drawn_; }
  std::uint64_t orders_spawned() const { return orders_spawned_; }
  std::vector<Customer> customers() const;

  void record_trace(bool on) { record_trace_ = on; }
  const std::vector<TraceRow>& trace() const { return trace_; }

  /// Advances the whole store (arrivals included) to absolute time `t`.
  void advance_to(double t);

 private:
  enum class EventKind : std::uint8_t { enter, ready };
  struct Event {
    double time;
    std::uint64_t seq;
    std::uint32_t slot;
    EventKind kind;
    bool operator>(const Event& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  std::uint32_t new_slot();
  void schedule(double time, std::uint32_t slot, EventKind kind);
  void process_until(double t);
  void on_enter(std::uint32_t slot, double now);
  void on_ready(std::uint32_t slot, double now);
  NodeId enter_next_stop(std::uint32_t slot, double now);
  void move(std::uint32_t slot, double now);
  void release(NodeId node, double now);
  void release_orders(double t);

  std::shared_ptr<const StoreModel> model_;
  Sequencer sequencer_;

  Rng arrivals_rng_;
  Rng lists_rng_;
  Rng orders_rng_;

  double clock_ = 0.0;
  double spawned_until_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_customer_id_ = 0;
  std::uint64_t next_order_id_ = 0;

  std::vector<Customer> slots_;
  std::vector<char> slot_active_;
  std::vector<std::uint32_t> free_slots_;
  std::vector<Event> events_;  // min-heap
  std::vector<int> counts_;
  std::vector<std::deque<std::uint32_t>> waiters_;
  std::vector<NodeId> release_stack_;
  std::size_t in_store_ = 0;
  std::uint64_t admitted_ = 0;
  std::uint64_t rejected_ = 0;
  std::uint64_t departed_ = 0;
  std::uint64_t arrivals_drawn_ = 0;
  std::uint64_t orders_spawned_ = 0;

  std::deque<OnlineOrder> pending_orders_;  // drawn, not yet arrived
  std::deque<OnlineOrder> queue_;           // arrived, waiting for the picker

  NodeId picker_ = 0;
  std::optional<OnlineOrder> active_;
  std::vector<NodeId> targets_;  // sequence followed by the prep zone
  std::vector<char> status_;
  std::size_t target_index_ = 0;
  bool done_ = false;
  bool truncated_ = false;
  std::uint64_t epoch_ = 0;
  EpisodeTotals totals_;
  bool record_trace_ = false;
  std::vector<TraceRow> trace_;
};

}  // namespace diprp
