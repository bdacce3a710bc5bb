#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "diprp/config.hpp"
#include "diprp/errors.hpp"
#include "diprp/instance_gen.hpp"
#include "diprp/store_env.hpp"
#include "support.hpp"

using namespace diprp;

namespace {

std::shared_ptr<const StoreModel> model_of(StoreGraph g, EnvConfig cfg) {
  return std::make_shared<const StoreModel>(std::move(g), cfg);
}

EnvConfig quiet_config() {
  EnvConfig cfg;
  cfg.lambda_store = 0.0;
  cfg.lambda_online = 0.0;
  return cfg;
}

// Entrance 0, product 1 at 10 m, prep zone 2 another 5 m on.
StoreGraph aisle_10m() {
  std::vector<StoreNode> nodes{{0, NodeKind::entrance, 0, 0},
                               {1, NodeKind::product_position, 10, 0},
                               {2, NodeKind::prep_zone, 15, 0}};
  return StoreGraph(nodes, {{0, 1, 10}, {1, 2, 5}});
}

// Node 1 is the only product; 2 and 3 are side aisles; 4 is the prep zone.
StoreGraph hub_graph() {
  std::vector<StoreNode> nodes{{0, NodeKind::entrance, 0, 0},
                               {1, NodeKind::product_position, 1, 0},
                               {2, NodeKind::intersection, 1, 1},
                               {3, NodeKind::intersection, 1, -1},
                               {4, NodeKind::prep_zone, 2, 0}};
  return StoreGraph(nodes, {{0, 1, 1}, {1, 2, 1}, {1, 3, 1}, {1, 4, 1}}, {{"SKU-1", 1}});
}

// Walks the distance shortest path to every target until the episode ends.
void play_shortest(StoreEnv& env, std::vector<StepOutcome>* outcomes = nullptr) {
  const auto& routes = env.model().distance_routes();
  while (env.await_decision()) {
    const auto out = env.step(routes.next_hop(env.picker_node(), *env.target()));
    if (outcomes) outcomes->push_back(out);
  }
}

}  // namespace

TEST(Reward, TableWeights) {
  const RewardWeights w;  // 1, 3, 1, 100
  EXPECT_EQ(assemble_reward(w, {1, 0, 0, 0}), -1.0);
  EXPECT_EQ(assemble_reward(w, {1, 1, 2, 1}), 94.0);
}

TEST(Reward, CumulativeOfTrace) {
  EXPECT_EQ(cumulative_reward({}), 0.0);
  std::vector<TraceRow> trace(3);
  trace[0].reward = -1;
  trace[1].reward = 94;
  trace[2].reward = -3;
  EXPECT_EQ(cumulative_reward(trace), 90.0);
}

TEST(Reset, InitialState) {
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1), EnvConfig{});
  StoreEnv env(model);
  env.reset(42);
  EXPECT_EQ(env.picker_node(), model->prep_zone());
  EXPECT_EQ(env.clock(), 0.0);
  EXPECT_EQ(env.customers_in_store(), 0u);
  EXPECT_TRUE(env.order_queue().empty());
  EXPECT_FALSE(env.active_order());
  EXPECT_EQ(env.totals().reward, 0.0);
  EXPECT_TRUE(env.trace().empty());
}

TEST(Reset, SameSeedSameStore) {
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::small), 1), EnvConfig{});
  StoreEnv a(model), b(model);
  a.reset(5);
  b.reset(5);
  a.advance_to(1800.0);
  b.advance_to(1800.0);
  const auto ca = a.customers();
  const auto cb = b.customers();
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) {
    EXPECT_EQ(ca[i].id, cb[i].id);
    EXPECT_EQ(ca[i].cursor, cb[i].cursor);
    EXPECT_EQ(ca[i].busy_until, cb[i].busy_until);
    ASSERT_EQ(ca[i].path.size(), cb[i].path.size());
  }
  ASSERT_EQ(a.order_queue().size(), b.order_queue().size());
  for (std::size_t i = 0; i < a.order_queue().size(); ++i) {
    EXPECT_EQ(a.order_queue()[i].picking_locations, b.order_queue()[i].picking_locations);
    EXPECT_EQ(a.order_queue()[i].arrival_time, b.order_queue()[i].arrival_time);
  }
}

TEST(Config, RejectsInvalidValues) {
  EnvConfig cfg;
  cfg.lambda_store = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.open_time_s = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.node_capacity = 0;
  EXPECT_THROW(model_of(test::line_graph(3), cfg), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  EnvConfig cfg;
  cfg.lambda_store = 1.25;
  cfg.concentration = Concentration::back;
  cfg.reward_weights.co_located = 7;
  const auto back = parse_config(config_to_json(cfg));
  EXPECT_EQ(back.lambda_store, 1.25);
  EXPECT_EQ(back.concentration, Concentration::back);
  EXPECT_EQ(back.reward_weights.co_located, 7.0);
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
  EXPECT_THROW(parse_config(R"({"lambda_stroe": 1})"), ParseError);
}

TEST(Arrivals, ZeroRateNeverSpawns) {
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1), quiet_config());
  StoreEnv env(model);
  env.reset(1);
  for (int i = 0; i < 500; ++i) env.spawn_arrivals(model->config().period_s);
  env.advance_customers(500 * model->config().period_s);
  EXPECT_EQ(env.arrivals_drawn(), 0u);
  EXPECT_EQ(env.customers_in_store(), 0u);
  EXPECT_EQ(env.orders_spawned(), 0u);
}

TEST(Arrivals, PoissonMeanPerPeriod) {
  EnvConfig cfg;
  cfg.lambda_online = 0.0;
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1), cfg);
  StoreEnv env(model);
  env.reset(3);
  constexpr int kPeriods = 20000;
  std::vector<double> counts;
  for (int i = 0; i < kPeriods; ++i) {
    const auto before = env.arrivals_drawn();
    env.spawn_arrivals(cfg.period_s);
    counts.push_back(double(env.arrivals_drawn() - before));
  }
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / kPeriods;
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  var /= kPeriods - 1;
  EXPECT_LT(std::abs(mean - 2.0), 3.0 * std::sqrt(var / kPeriods));
  EXPECT_NEAR(var, 2.0, 0.1);  // Poisson: variance equals the mean
}

TEST(Arrivals, StoreCapacityHolds) {
  EnvConfig cfg;
  cfg.lambda_store = 20.0;
  cfg.store_capacity = 7;
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::small), 1), cfg);
  StoreEnv env(model);
  env.reset(4);
  for (double t = 5; t < 3600; t += 5) {
    env.advance_to(t);
    ASSERT_LE(env.customers_in_store(), 7u);
  }
  EXPECT_GT(env.customers_rejected(), 0u);
  EXPECT_LE(env.customers_admitted() + env.customers_rejected(), env.arrivals_drawn());
}

TEST(Customers, DepartsProductNodeAfterWalkAndService) {
  auto model = model_of(aisle_10m(), quiet_config());
  StoreEnv env(model);
  env.reset(1);
  const std::vector<NodeId> list{1};
  env.admit_customer(list, 2, 0.0);
  env.advance_customers(39.5);
  EXPECT_EQ(env.customers_at(1), 1);
  ASSERT_EQ(env.customers().size(), 1u);
  EXPECT_EQ(env.customers()[0].busy_until, 40.0);
  env.advance_customers(0.5);  // t = 40
  EXPECT_EQ(env.customers_at(1), 0);
  EXPECT_EQ(env.customers_at(2), 1);
  env.advance_customers(5.0);  // reaches the exit at 45 and leaves
  EXPECT_EQ(env.customers_in_store(), 0u);
  EXPECT_EQ(env.customers_departed(), 1u);
}

TEST(Customers, EmptyStoreIsNoOp) {
  auto model = model_of(aisle_10m(), quiet_config());
  StoreEnv env(model);
  env.reset(1);
  env.advance_customers(100.0);
  EXPECT_EQ(env.customers_in_store(), 0u);
  EXPECT_EQ(env.clock(), 100.0);
}

TEST(Customers, SixthCustomerWaits) {
  auto model = model_of(test::line_graph(4, 2.0), quiet_config());
  StoreEnv env(model);
  env.reset(1);
  const std::vector<NodeId> list{1};
  for (int i = 0; i < 6; ++i) env.admit_customer(list, 3, 0.0);
  env.advance_customers(1.0);
  EXPECT_EQ(env.customers_at(1), 5);
  EXPECT_EQ(env.customers_at(0), 1);
  const auto waiting = env.customers();
  EXPECT_TRUE(waiting.back().waiting);
  EXPECT_EQ(waiting.back().current_node(), 0u);
  // The first five finish at 2 + 30 = 32 s; the sixth then enters node 1.
  env.advance_customers(31.5);
  EXPECT_EQ(env.customers_at(1), 1);
  EXPECT_EQ(env.customers_at(0), 0);
  EXPECT_FALSE(env.customers().back().waiting);
}

TEST(Customers, CapacityReleasesInArrivalOrder) {
  auto model = model_of(test::line_graph(4, 2.0), quiet_config());
  StoreEnv env(model);
  env.reset(1);
  const std::vector<NodeId> list{1};
  for (int i = 0; i < 8; ++i) env.admit_customer(list, 3, 0.1 * i);
  // Customer 0 leaves node 1 at 32 s; only the oldest waiter may take its place.
  env.advance_customers(32.05);
  const auto cs = env.customers();
  ASSERT_EQ(cs.size(), 8u);
  EXPECT_EQ(cs[5].current_node(), 1u);
  EXPECT_EQ(cs[6].current_node(), 0u);
  EXPECT_EQ(cs[7].current_node(), 0u);
  env.advance_customers(0.1);
  EXPECT_EQ(env.customers()[6].current_node(), 1u);
  EXPECT_EQ(env.customers()[7].current_node(), 0u);
}

TEST(Customers, ConservationAndNodeCaps) {
  EnvConfig cfg;
  cfg.lambda_store = 6.0;
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::small), 2), cfg);
  StoreEnv env(model);
  env.reset(9);
  for (double t = 7; t < 4 * 3600; t += 7) {
    env.advance_to(t);
    ASSERT_EQ(env.customers_admitted(), env.customers_departed() + env.customers_in_store());
    int total = 0;
    for (NodeId x = 0; x < env.graph().size(); ++x) {
      total += env.customers_at(x);
      if (model->capped(x)) ASSERT_LE(env.customers_at(x), cfg.node_capacity);
    }
    ASSERT_EQ(std::size_t(total), env.customers_in_store());
    ASSERT_LE(env.customers_in_store(), std::size_t(cfg.store_capacity));
  }
}

TEST(Step, EmptyMoveCostsOneStep) {
  EnvConfig cfg = quiet_config();
  cfg.lambda_online = 50.0;
  auto model = model_of(hub_graph(), cfg);
  StoreEnv env(model);
  env.reset(1);
  ASSERT_TRUE(env.await_decision());
  EXPECT_EQ(*env.target(), 1u);
  EXPECT_THROW(env.step(0), ContractViolation);  // not adjacent to the prep zone
  const auto first = env.step(1);
  EXPECT_EQ(first.reward, 99.0);  // -1 step + 100 pick
  const auto second = env.step(2);
  EXPECT_EQ(second.reward, -1.0);
  EXPECT_EQ(second.target_node, model->prep_zone());
}

TEST(Step, CrowdedPick) {
  EnvConfig cfg = quiet_config();
  cfg.lambda_online = 1000.0;
  auto model = model_of(hub_graph(), cfg);
  StoreEnv env(model);
  env.reset(1);
  // One customer serves at the product node, two stand in the side aisles.
  const std::vector<NodeId> at_product{1}, left{2}, right{3};
  env.admit_customer(at_product, 4, 0.0);
  env.admit_customer(left, 4, 0.0);
  env.admit_customer(right, 4, 0.0);
  ASSERT_TRUE(env.await_decision());
  ASSERT_LT(env.clock(), 1.0);
  const auto out = env.step(1);
  EXPECT_EQ(out.features.co_located, 1);
  EXPECT_EQ(out.features.visible, 2);
  EXPECT_EQ(out.features.picks, 1);
  EXPECT_EQ(out.reward, 94.0);
}

TEST(Step, NoCustomersNoEncounters) {
  EnvConfig cfg;
  cfg.lambda_store = 0.0;
  cfg.open_time_s = 2 * 3600.0;
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::small), 1), cfg);
  StoreEnv env(model);
  env.reset(2);
  Rng rng(3);
  std::size_t steps = 0;
  while (env.await_decision()) {
    // Random walk, biased to the target so orders still finish.
    const auto nbs = env.graph().neighbors(env.picker_node());
    const NodeId a = uniform01(rng) < 0.5
                         ? model->distance_routes().next_hop(env.picker_node(), *env.target())
                         : nbs[uniform_index(rng, nbs.size())].node;
    const auto out = env.step(a);
    ASSERT_EQ(out.reward, -1.0 + 100.0 * out.features.picks);
    ++steps;
  }
  EXPECT_GT(steps, 100u);
  EXPECT_EQ(env.totals().encounters(), 0u);
}

TEST(Orders, FifoAndSequencing) {
  EnvConfig cfg;
  cfg.lambda_store = 0.0;
  cfg.lambda_online = 5.0;
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1), cfg);
  StoreEnv env(model);
  env.reset(7);
  env.advance_to(600.0);
  ASSERT_GE(env.order_queue().size(), 2u);
  for (std::size_t i = 1; i < env.order_queue().size(); ++i) {
    EXPECT_LT(env.order_queue()[i - 1].id, env.order_queue()[i].id);
    EXPECT_LE(env.order_queue()[i - 1].arrival_time, env.order_queue()[i].arrival_time);
  }
  for (const auto& o : env.order_queue()) {
    EXPECT_GE(o.picking_locations.size(), 1u);
    EXPECT_LE(o.picking_locations.size(), std::size_t(cfg.max_order_size));
  }
  const auto first = env.order_queue().front().id;
  const auto second = env.order_queue()[1].id;
  ASSERT_TRUE(env.assign_next_order());
  EXPECT_EQ(env.active_order()->id, first);
  EXPECT_EQ(env.order_queue().front().id, second);
  EXPECT_EQ(*env.target(), env.active_order()->sequence.front());
}

TEST(Orders, EmptyQueueIsNoOp) {
  auto model = model_of(hub_graph(), quiet_config());
  StoreEnv env(model);
  env.reset(1);
  EXPECT_FALSE(env.assign_next_order());
  EXPECT_FALSE(env.active_order());
}

TEST(Orders, SequencerMustReturnPermutation) {
  EnvConfig cfg = quiet_config();
  cfg.lambda_online = 20.0;
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1), cfg);
  StoreEnv env(model);
  env.reset(1);
  env.advance_to(60.0);
  ASSERT_FALSE(env.order_queue().empty());
  const Sequencer broken = [](NodeId, std::span<const NodeId> l) {
    return std::vector<NodeId>(l.begin(), l.end() - 1);
  };
  EXPECT_THROW(env.assign_next_order(broken), ContractViolation);
}

TEST(Orders, SingleProductOrderTargetsIt) {
  EnvConfig cfg = quiet_config();
  cfg.lambda_online = 10.0;
  auto model = model_of(hub_graph(), cfg);
  StoreEnv env(model);
  env.reset(2);
  ASSERT_TRUE(env.await_decision());
  EXPECT_EQ(env.active_order()->picking_locations, std::vector<NodeId>{1});
  EXPECT_EQ(*env.target(), 1u);
}

TEST(Episode, PickingStatusAndTotals) {
  EnvConfig cfg;
  cfg.open_time_s = 3600.0;
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::small), 1), cfg);
  StoreEnv env(model);
  env.reset(11);
  env.record_trace(true);
  const auto& routes = model->distance_routes();
  std::uint64_t picks_in_order = 0;
  std::size_t completed = 0;
  NodeId last = env.picker_node();
  while (env.await_decision()) {
    const auto before = env.picking_status();
    const auto out = env.step(routes.next_hop(env.picker_node(), *env.target()));
    ASSERT_TRUE(env.graph().adjacent(last, out.picker_node));
    last = out.picker_node;
    picks_in_order += out.features.picks;
    if (out.order_completed) {
      ++completed;
      picks_in_order = 0;
      continue;
    }
    // z only flips from 0 to 1.
    for (std::size_t i = 0; i < before.size(); ++i) ASSERT_LE(before[i], env.picking_status()[i]);
    if (std::all_of(env.picking_status().begin(), env.picking_status().end(), [](char z) { return z; })) {
      ASSERT_EQ(picks_in_order, env.active_order()->picking_locations.size());
    }
  }
  EXPECT_GT(completed, 0u);
  EXPECT_TRUE(env.done());
  EXPECT_EQ(env.picker_node(), model->prep_zone());
  const auto& t = env.totals();
  EXPECT_EQ(t.orders, completed);
  EXPECT_DOUBLE_EQ(cumulative_reward(env.trace()), t.reward);
  EXPECT_DOUBLE_EQ(t.reward, 100.0 * t.products - 1.0 * t.steps - 3.0 * t.co_located - 1.0 * t.visible);
}

TEST(Episode, DeterministicUnderSeedAndActions) {
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::small), 1), EnvConfig{});
  auto run = [&] {
    StoreEnv env(model);
    env.reset(21);
    env.record_trace(true);
    play_shortest(env);
    return env.trace();
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].t, b[i].t);
    ASSERT_EQ(a[i].node, b[i].node);
    ASSERT_EQ(a[i].action, b[i].action);
    ASSERT_EQ(a[i].reward, b[i].reward);
  }
}

TEST(Episode, CustomerStreamIgnoresThePicker) {
  // Two different picker behaviours see the same store at the same times.
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::small), 1), EnvConfig{});
  StoreEnv a(model), b(model);
  a.reset(8);
  b.reset(8);
  ASSERT_TRUE(a.await_decision());
  ASSERT_TRUE(b.await_decision());
  a.step(a.graph().neighbors(a.picker_node())[0].node);
  b.advance_to(a.clock());
  for (NodeId x = 0; x < a.graph().size(); ++x) ASSERT_EQ(a.customers_at(x), b.customers_at(x));
}

TEST(Episode, AbandonsQueuedOrdersAtClosing) {
  EnvConfig cfg;
  cfg.lambda_store = 0.0;
  cfg.lambda_online = 5.0;  // far more orders than one picker can serve
  cfg.open_time_s = 1800.0;
  auto model = model_of(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1), cfg);
  StoreEnv env(model);
  env.reset(3);
  play_shortest(env);
  EXPECT_TRUE(env.done());
  EXPECT_FALSE(env.truncated());
  EXPECT_GT(env.order_queue().size(), 0u);
  EXPECT_LT(env.totals().orders, env.orders_spawned());
  EXPECT_GE(env.clock(), cfg.open_time_s);
}

TEST(Episode, OvertimeStopTruncates) {
  EnvConfig cfg = quiet_config();
  cfg.lambda_online = 50.0;
  cfg.open_time_s = 60.0;
  cfg.overtime_limit_s = 30.0;
  auto model = model_of(hub_graph(), cfg);
  StoreEnv env(model);
  env.reset(1);
  ASSERT_TRUE(env.await_decision());
  StepOutcome out;
  // Pace between two side nodes forever.
  NodeId a = 2;
  env.step(1);
  while (!out.done) {
    out = env.step(a);
    out = out.done ? out : env.step(1);
    a = a == 2 ? 3 : 2;
  }
  EXPECT_TRUE(out.truncated);
  EXPECT_TRUE(env.truncated());
  EXPECT_GE(env.clock(), 90.0);
  EXPECT_FALSE(env.await_decision());
}
