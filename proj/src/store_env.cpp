#include "diprp/store_env.hpp"

#include <algorithm>
#include <numeric>

#include "diprp/errors.hpp"

namespace diprp {

int Observation::visible() const {
  int total = 0;
  for (const auto& [node, count] : neighbor_customers) total += count;
  return total;
}

int Observation::customers_at(NodeId neighbor) const {
  for (const auto& [node, count] : neighbor_customers) {
    if (node == neighbor) return count;
  }
  throw ContractViolation("node " + std::to_string(neighbor) + " is not a neighbour");
}

double assemble_reward(const RewardWeights& w, const StepFeatures& f) {
  return -w.step * f.steps - w.co_located * f.co_located - w.visible * f.visible + w.pick * f.picks;
}

double cumulative_reward(std::span<const TraceRow> trace) {
  double total = 0.0;
  for (const auto& row : trace) total += row.reward;
  return total;
}

Sequencer identity_sequencer() {
  return [](NodeId, std::span<const NodeId> locations) {
    std::vector<NodeId> seq(locations.begin(), locations.end());
    std::sort(seq.begin(), seq.end());
    return seq;
  };
}

// ---------------------------------------------------------------------------

namespace {

StoreGraph checked(StoreGraph graph) {
  const auto report = validate(graph);
  if (!report.empty()) throw ConfigError("invalid layout: " + report.front());
  return graph;
}

}  // namespace

StoreModel::StoreModel(StoreGraph graph, EnvConfig config)
    : graph_(checked(std::move(graph))),
      config_(config),
      routes_(graph_, length_weight()),
      customer_profile_(make_profile(graph_, config.concentration)),
      order_profile_(make_profile(graph_, Concentration::uniform)),
      prep_(*graph_.prep_zone()),
      exits_(graph_.exit_nodes()),
      capped_(graph_.size(), 0) {
  config_.validate();
  for (const auto& node : graph_.nodes()) {
    capped_[node.id] =
        node.kind == NodeKind::intersection || node.kind == NodeKind::product_position;
  }
}

std::vector<PathStop> StoreModel::shopping_path(std::span<const NodeId> list, NodeId exit) const {
  std::vector<PathStop> path{{graph_.start_depot(), false, 0.0}};
  auto walk_to = [&](NodeId goal, bool service) {
    NodeId at = path.back().node;
    while (at != goal) {
      const NodeId next = routes_.next_hop(at, goal);
      path.push_back({next, false, graph_.edge_length(at, next)});
      at = next;
    }
    if (service) path.back().service = true;
  };
  for (NodeId item : list) {
    if (path.back().node == item) {
      // Consecutive identical stops: serve again without moving.
      path.back().service = true;
      continue;
    }
    walk_to(item, true);
  }
  walk_to(exit, false);
  if (path.size() == 1) throw ConfigError("customer exit coincides with the entrance");
  return path;
}

// ---------------------------------------------------------------------------

StoreEnv::StoreEnv(std::shared_ptr<const StoreModel> model, Sequencer sequencer)
    : model_(std::move(model)), sequencer_(std::move(sequencer)) {
  if (!model_) throw ConfigError("environment needs a store model");
  reset(0);
}

void StoreEnv::reset(std::uint64_t seed) {
  arrivals_rng_ = make_rng(seed, Stream::customer_arrivals);
  lists_rng_ = make_rng(seed, Stream::shopping_lists);
  orders_rng_ = make_rng(seed, Stream::orders);
  const std::size_t n = graph().size();
  clock_ = 0.0;
  spawned_until_ = 0.0;
  next_seq_ = 0;
  next_customer_id_ = 0;
  next_order_id_ = 0;
  slots_.clear();
  slot_active_.clear();
  free_slots_.clear();
  events_.clear();
  counts_.assign(n, 0);
  waiters_.assign(n, {});
  release_stack_.clear();
  in_store_ = 0;
  admitted_ = rejected_ = departed_ = arrivals_drawn_ = orders_spawned_ = 0;
  pending_orders_.clear();
  queue_.clear();
  picker_ = model_->prep_zone();
  active_.reset();
  targets_.clear();
  status_.clear();
  target_index_ = 0;
  done_ = false;
  truncated_ = false;
  epoch_ = 0;
  totals_ = {};
  trace_.clear();
}

std::uint32_t StoreEnv::new_slot() {
  if (!free_slots_.empty()) {
    const auto s = free_slots_.back();
    free_slots_.pop_back();
    return s;
  }
  slots_.emplace_back();
  slot_active_.push_back(0);
  return static_cast<std::uint32_t>(slots_.size() - 1);
}

void StoreEnv::schedule(double time, std::uint32_t slot, EventKind kind) {
  events_.push_back({time, next_seq_++, slot, kind});
  std::push_heap(events_.begin(), events_.end(), std::greater<>{});
}

void StoreEnv::spawn_arrivals(double dt) {
  if (!(dt > 0.0)) throw ContractViolation("spawn_arrivals needs dt > 0");
  const auto& cfg = model_->config();
  const double from = spawned_until_;

  auto arrival_times = [&](Rng& rng, double rate) {
    const auto count = poisson(rng, rate * dt / cfg.period_s);
    std::vector<double> times(count);
    for (auto& t : times) t = from + uniform01(rng) * dt;
    std::sort(times.begin(), times.end());
    return times;
  };

  const auto customer_times = arrival_times(arrivals_rng_, cfg.lambda_store);
  arrivals_drawn_ += customer_times.size();
  for (double t : customer_times) {
    const auto list = sample_shopping_list(model_->customer_profile(), lists_rng_, cfg.max_list_size);
    const auto& exits = model_->exits();
    const NodeId exit = exits[uniform_index(lists_rng_, exits.size())];
    const auto slot = new_slot();
    slots_[slot] = Customer{next_customer_id_++, model_->shopping_path(list, exit), 0, t, false};
    schedule(t, slot, EventKind::enter);
  }

  const auto order_times = arrival_times(orders_rng_, cfg.lambda_online);
  for (double t : order_times) {
    auto locations = sample_shopping_list(model_->order_profile(), orders_rng_, cfg.max_order_size);
    std::sort(locations.begin(), locations.end());
    pending_orders_.push_back({next_order_id_++, std::move(locations), t, {}});
  }
  orders_spawned_ += order_times.size();
  spawned_until_ = from + dt;
}

void StoreEnv::admit_customer(std::span<const NodeId> list, NodeId exit, double at) {
  if (at < clock_) throw ContractViolation("cannot admit a customer in the past");
  const auto slot = new_slot();
  slots_[slot] = Customer{next_customer_id_++, model_->shopping_path(list, exit), 0, at, false};
  schedule(at, slot, EventKind::enter);
}

void StoreEnv::process_until(double t) {
  while (!events_.empty() && events_.front().time <= t) {
    std::pop_heap(events_.begin(), events_.end(), std::greater<>{});
    const Event ev = events_.back();
    events_.pop_back();
    if (ev.kind == EventKind::enter) {
      on_enter(ev.slot, ev.time);
    } else {
      on_ready(ev.slot, ev.time);
    }
  }
}

void StoreEnv::on_enter(std::uint32_t slot, double now) {
  if (in_store_ >= static_cast<std::size_t>(model_->config().store_capacity)) {
    ++rejected_;
    free_slots_.push_back(slot);
    return;
  }
  ++admitted_;
  ++in_store_;
  slot_active_[slot] = 1;
  Customer& c = slots_[slot];
  c.cursor = 0;
  c.busy_until = now + (c.path[0].service ? model_->config().customer_service_time : 0.0);
  ++counts_[c.current_node()];
  schedule(c.busy_until, slot, EventKind::ready);
}

void StoreEnv::on_ready(std::uint32_t slot, double now) {
  Customer& c = slots_[slot];
  if (c.cursor + 1 == c.path.size()) {
    const NodeId exit = c.current_node();
    --counts_[exit];
    --in_store_;
    ++departed_;
    slot_active_[slot] = 0;
    free_slots_.push_back(slot);
    release(exit, now);
    return;
  }
  const NodeId next = c.path[c.cursor + 1].node;
  const auto& cfg = model_->config();
  if (cfg.enforce_node_capacity && model_->capped(next) && counts_[next] >= cfg.node_capacity) {
    c.waiting = true;
    waiters_[next].push_back(slot);
    return;
  }
  move(slot, now);
}

NodeId StoreEnv::enter_next_stop(std::uint32_t slot, double now) {
  Customer& c = slots_[slot];
  const auto& cfg = model_->config();
  const NodeId from = c.current_node();
  ++c.cursor;
  c.waiting = false;
  const PathStop& stop = c.path[c.cursor];
  --counts_[from];
  ++counts_[stop.node];
  c.busy_until = now + stop.leg / cfg.customer_speed;
  if (stop.service && c.cursor + 1 < c.path.size()) c.busy_until += cfg.customer_service_time;
  schedule(c.busy_until, slot, EventKind::ready);
  return from;
}

void StoreEnv::move(std::uint32_t slot, double now) { release(enter_next_stop(slot, now), now); }

// A slot opened on `node`: let blocked customers in, FIFO, and cascade to the
// nodes they vacate.
void StoreEnv::release(NodeId node, double now) {
  const int capacity = model_->config().node_capacity;
  release_stack_.push_back(node);
  while (!release_stack_.empty()) {
    const NodeId x = release_stack_.back();
    release_stack_.pop_back();
    auto& queue = waiters_[x];
    if (queue.empty() || counts_[x] >= capacity) continue;
    const auto waiter = queue.front();
    queue.pop_front();
    release_stack_.push_back(x);
    release_stack_.push_back(enter_next_stop(waiter, now));
  }
}

void StoreEnv::advance_customers(double dt) {
  if (!(dt > 0.0)) throw ContractViolation("advance_customers needs dt > 0");
  process_until(clock_ + dt);
  clock_ += dt;
}

void StoreEnv::release_orders(double t) {
  while (!pending_orders_.empty() && pending_orders_.front().arrival_time <= t) {
    queue_.push_back(std::move(pending_orders_.front()));
    pending_orders_.pop_front();
  }
}

void StoreEnv::advance_to(double t) {
  if (t < clock_) return;
  const double period = model_->config().period_s;
  while (spawned_until_ <= t) spawn_arrivals(period);
  process_until(t);
  release_orders(t);
  clock_ = t;
}

std::vector<Customer> StoreEnv::customers() const {
  std::vector<Customer> out;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slot_active_[i]) out.push_back(slots_[i]);
  }
  std::sort(out.begin(), out.end(), [](const Customer& a, const Customer& b) { return a.id < b.id; });
  return out;
}

std::optional<NodeId> StoreEnv::target() const {
  if (!active_) return std::nullopt;
  return targets_[target_index_];
}

bool StoreEnv::assign_next_order(const Sequencer& sequencer) {
  if (active_) throw ContractViolation("picker already has an active order");
  if (picker_ != model_->prep_zone()) throw ContractViolation("picker must be at the prep zone");
  if (queue_.empty()) return false;
  OnlineOrder order = std::move(queue_.front());
  queue_.pop_front();
  order.sequence = sequencer(model_->prep_zone(), order.picking_locations);
  auto sorted = order.sequence;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != order.picking_locations) {
    throw ContractViolation("picking sequence is not a permutation of the order locations");
  }
  targets_ = order.sequence;
  targets_.push_back(model_->prep_zone());
  status_.assign(order.sequence.size(), 0);
  target_index_ = 0;
  active_ = std::move(order);
  return true;
}

bool StoreEnv::await_decision() {
  const double close = model_->config().open_time_s;
  while (!done_) {
    if (active_) return true;
    if (clock_ >= close) {
      done_ = true;
      break;
    }
    if (!queue_.empty()) {
      assign_next_order();
      continue;
    }
    const double next = pending_orders_.empty() ? spawned_until_ : pending_orders_.front().arrival_time;
    advance_to(std::min(std::max(next, clock_), close));
  }
  return false;
}

Observation StoreEnv::observe() const {
  Observation obs;
  obs.picker_node = picker_;
  obs.target_node = active_ ? targets_[target_index_] : model_->prep_zone();
  obs.co_located = counts_[picker_];
  for (const auto& nb : graph().neighbors(picker_)) {
    obs.neighbor_customers.emplace_back(nb.node, counts_[nb.node]);
  }
  return obs;
}

StepOutcome StoreEnv::step(NodeId action) {
  if (!active_ || done_) throw ContractViolation("step needs an active order");
  const double length = graph().edge_length(picker_, action);  // throws when not adjacent
  const auto& cfg = model_->config();
  const NodeId from = picker_;
  const double decided_at = clock_;

  advance_to(clock_ + length / cfg.picker_speed);
  picker_ = action;

  StepOutcome out;
  out.features.steps = 1;
  out.features.co_located = counts_[picker_];
  for (const auto& nb : graph().neighbors(picker_)) out.features.visible += counts_[nb.node];

  const std::size_t picks = status_.size();
  if (target_index_ < picks && picker_ == targets_[target_index_]) {
    out.features.picks = 1;
    status_[target_index_] = 1;
    ++target_index_;
    advance_to(clock_ + cfg.picker_service_time);
  } else if (target_index_ == picks && picker_ == model_->prep_zone()) {
    out.order_completed = true;
  }
  out.reward = assemble_reward(cfg.reward_weights, out.features);
  out.picker_node = picker_;
  out.target_node = targets_[std::min(target_index_, targets_.size() - 1)];

  totals_.reward += out.reward;
  totals_.steps += out.features.steps;
  totals_.co_located += out.features.co_located;
  totals_.visible += out.features.visible;
  totals_.products += out.features.picks;
  if (out.order_completed) {
    ++totals_.orders;
    active_.reset();
    targets_.clear();
    status_.clear();
    target_index_ = 0;
    if (clock_ >= cfg.open_time_s) done_ = true;
  } else if (clock_ >= cfg.open_time_s + cfg.overtime_limit_s) {
    // Runaway episode: abandon the order in progress.
    active_.reset();
    done_ = true;
    truncated_ = true;
  }
  out.done = done_;
  out.truncated = truncated_;

  if (record_trace_) {
    trace_.push_back({epoch_, decided_at, from, action, out.features, out.reward, out.order_completed});
  }
  ++epoch_;
  return out;
}

}  // namespace diprp
