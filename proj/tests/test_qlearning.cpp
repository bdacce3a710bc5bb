#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "diprp/errors.hpp"
#include "diprp/harness.hpp"
#include "diprp/instance_gen.hpp"
#include "diprp/qlearning.hpp"
#include "support.hpp"

using namespace diprp;

namespace {

std::vector<NodeId> legal_of(const StoreGraph& g, NodeId x) {
  std::vector<NodeId> out;
  for (const auto& nb : g.neighbors(x)) out.push_back(nb.node);
  return out;
}

// 3 x 3 lattice of unit edges: entrance 0 and prep zone 8 on opposite corners.
StoreGraph lattice() {
  std::vector<StoreNode> nodes;
  std::vector<StoreEdge> edges;
  for (NodeId id = 0; id < 9; ++id) {
    nodes.push_back({id, NodeKind::product_position, double(id % 3), double(id / 3)});
    if (id % 3 < 2) edges.push_back({id, id + 1, 1.0});
    if (id < 6) edges.push_back({id, id + 3, 1.0});
  }
  nodes[0].kind = NodeKind::entrance;
  nodes[8].kind = NodeKind::prep_zone;
  return StoreGraph(nodes, edges);
}

}  // namespace

TEST(SelectAction, GreedyTakesLargerValue) {
  QTable table;
  const QState s{85, 123};
  const std::vector<NodeId> legal{77, 93};
  table.set(s, legal, 77, 61.94);
  table.set(s, legal, 93, 45.0);
  Rng rng(1);
  EXPECT_EQ(select_action(table, s, legal, 0.0, rng), 77u);
  const QTable& frozen = table;
  EXPECT_EQ(select_action(frozen, s, legal, 0.0, rng), 77u);
}

TEST(SelectAction, TiesGoToSmallestId) {
  QTable table;
  const QState s{1, 2};
  const std::vector<NodeId> legal{4, 7, 9};
  for (NodeId a : legal) table.set(s, legal, a, 5.0);
  Rng rng(1);
  EXPECT_EQ(select_action(table, s, legal, 0.0, rng), 4u);
}

TEST(SelectAction, SingleLegalAction) {
  QTable table;
  Rng rng(2);
  const std::vector<NodeId> legal{6};
  for (double eps : {0.0, 0.5, 1.0}) EXPECT_EQ(select_action(table, QState{5, 9}, legal, eps, rng), 6u);
}

TEST(SelectAction, EmptyLegalSetIsAViolation) {
  QTable table;
  Rng rng(3);
  EXPECT_THROW(select_action(table, QState{1, 2}, {}, 0.1, rng), ContractViolation);
}

TEST(SelectAction, FullExplorationIsUniform) {
  QTable table;
  const QState s{0, 9};
  const std::vector<NodeId> legal{1, 2, 3, 4};
  table.set(s, legal, 3, 1000.0);
  Rng rng(4);
  std::map<NodeId, int> counts;
  constexpr int kDraws = 40000;
  for (int i = 0; i < kDraws; ++i) ++counts[select_action(table, s, legal, 1.0, rng)];
  double chi2 = 0.0;
  const double expected = kDraws / 4.0;
  for (NodeId a : legal) chi2 += std::pow(counts[a] - expected, 2) / expected;
  EXPECT_LT(chi2, 16.27);  // chi-square, 3 dof, p = 0.001
}

TEST(SelectAction, UnseenStateInFrozenTable) {
  const QTable table;
  Rng rng(5);
  const std::vector<NodeId> legal{2, 3};
  std::map<NodeId, int> counts;
  for (int i = 0; i < 2000; ++i) ++counts[select_action(table, QState{1, 4}, legal, 0.0, rng)];
  EXPECT_GT(counts[2], 800);
  EXPECT_GT(counts[3], 800);
  EXPECT_EQ(table.size(), 0u);
}

TEST(Update, Examples) {
  const QState s{1, 5}, next{2, 5};
  const std::vector<NodeId> legal{0, 2}, legal_next{1, 3};
  auto fresh = [&] {
    QTable t;
    t.set(s, legal, 2, 0.0);
    t.set(s, legal, 0, 0.0);
    t.set(next, legal_next, 1, 0.0);
    t.set(next, legal_next, 3, 0.0);
    return t;
  };
  auto t = fresh();
  update(t, s, 2, 10.0, next, legal_next, 1.0, 0.0);
  EXPECT_EQ(t.value(s, 2), 10.0);
  t = fresh();
  update(t, s, 2, 10.0, next, legal_next, 0.5, 0.9);
  EXPECT_EQ(t.value(s, 2), 5.0);
  t = fresh();
  t.set(next, legal_next, 3, 20.0);
  update(t, s, 2, 10.0, next, legal_next, 0.5, 0.5);
  EXPECT_EQ(t.value(s, 2), 10.0);  // 0 + 0.5 * (10 + 0.5 * 20 - 0)
  update(t, s, 0, -4.0, next, legal_next, 0.5, 0.5, true);
  EXPECT_EQ(t.value(s, 0), -2.0);  // terminal: no bootstrap
}

TEST(Update, ZeroLearningRateChangesNothing) {
  QTable t(0.0, 200.0, 3);
  const QState s{1, 5}, next{2, 5};
  const std::vector<NodeId> legal{0, 2}, legal_next{1, 3};
  t.row(s, legal);
  const double before = t.value(s, 2);
  for (double r : {-100.0, 0.0, 55.0}) {
    // alpha = 0 is outside TrainConfig's range but the update rule itself is defined there.
    EXPECT_EQ(update(t, s, 2, r, next, legal_next, 0.0, 0.9), 0.0);
  }
  EXPECT_EQ(t.value(s, 2), before);
}

TEST(Update, IsLocal) {
  const auto g = generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1);
  QTable t(0.0, 200.0, 4);
  Rng rng(6);
  for (NodeId x = 0; x < g.size(); ++x) t.row(QState{x, 13}, legal_of(g, x));
  const QTable before = t;
  const QState s{4, 13};
  const NodeId a = legal_of(g, 4).front();
  update(t, s, a, -3.0, QState{a, 13}, legal_of(g, a), 0.5, 0.9);
  std::size_t changed = 0;
  for (const auto& [state, row] : t.sorted_rows()) {
    for (std::size_t i = 0; i < row->actions.size(); ++i) {
      changed += row->values[i] != before.value(state, row->actions[i]);
    }
  }
  EXPECT_EQ(changed, 1u);
  EXPECT_EQ(t.size(), before.size());
}

TEST(Update, UnseenNextStateUsesInitialValues) {
  QTable t(0.0, 200.0, 8);
  const QState s{1, 5}, next{2, 5};
  const std::vector<NodeId> legal{0, 2}, legal_next{1, 3};
  t.set(s, legal, 2, 0.0);
  const double best = std::max(t.initial_value(next, 1), t.initial_value(next, 3));
  update(t, s, 2, 1.0, next, legal_next, 1.0, 0.5);
  EXPECT_EQ(t.value(s, 2), 1.0 + 0.5 * best);
  EXPECT_FALSE(t.contains(next));
}

TEST(QTable, OptimisticInitialisation) {
  QTable t(0.0, 200.0, 9);
  const auto g = generate_layout(LayoutSpec::for_size(LayoutSize::small), 1);
  for (NodeId x = 0; x < g.size(); ++x) {
    const auto legal = legal_of(g, x);
    const auto& row = t.row(QState{x, 30}, legal);
    EXPECT_EQ(row.actions, legal);
    for (double v : row.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 200.0);
    }
  }
  // Initial values do not depend on the order rows are created in.
  QTable u(0.0, 200.0, 9);
  for (NodeId x = g.size(); x-- > 0;) u.row(QState{x, 30}, legal_of(g, x));
  EXPECT_EQ(t, u);
  EXPECT_THROW(t.row(QState{0, 30}, std::vector<NodeId>{99}), ContractViolation);
}

TEST(QLearning, ChainMatchesValueIteration) {
  // Line 0 - 1 - 2 - 3 with target 3 (terminal). Entering node x pays r[x].
  const auto g = test::line_graph(4);
  const std::vector<double> r{-2.0, -1.0, -1.0, 10.0};
  const double gamma = 0.9;
  const NodeId target = 3;

  std::map<std::pair<NodeId, NodeId>, double> vi;
  for (NodeId x = 0; x < 3; ++x)
    for (NodeId a : legal_of(g, x)) vi[{x, a}] = 0.0;
  for (int sweep = 0; sweep < 500; ++sweep) {
    for (auto& [key, q] : vi) {
      const NodeId a = key.second;
      double next = 0.0;
      if (a != target) {
        next = -1e300;
        for (NodeId b : legal_of(g, a)) next = std::max(next, vi[{a, b}]);
      }
      q = r[a] + gamma * next;
    }
  }

  QTable t(0.0, 20.0, 1);
  for (int sweep = 0; sweep < 400; ++sweep) {
    for (NodeId x = 0; x < 3; ++x) {
      for (NodeId a : legal_of(g, x)) {
        t.row(QState{x, target}, legal_of(g, x));
        update(t, QState{x, target}, a, r[a], QState{a, target}, legal_of(g, a), 0.5, gamma, a == target);
      }
    }
  }
  for (const auto& [key, q] : vi) EXPECT_NEAR(t.value(QState{key.first, target}, key.second), q, 1e-6);
}

TEST(Train, ZeroEpisodesLeavesTableUntouched) {
  auto model = std::make_shared<const StoreModel>(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1),
                                                  EnvConfig{});
  StoreEnv env(model);
  TrainConfig cfg;
  cfg.episodes = 0;
  const auto r = train(env, cfg, 1);
  EXPECT_EQ(r.table.size(), 0u);
  EXPECT_TRUE(r.rewards.empty());
  EXPECT_FALSE(r.converged);
}

TEST(Train, DeterministicAndKeyedByVisits) {
  EnvConfig env_cfg;
  env_cfg.open_time_s = 2 * 3600.0;
  auto model =
      std::make_shared<const StoreModel>(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1), env_cfg);
  StoreEnv a = make_env(model, RoutingBasis::arc_distance);
  StoreEnv b = make_env(model, RoutingBasis::arc_distance);
  TrainConfig cfg;
  cfg.episodes = 20;
  const auto ra = train(a, cfg, 17);
  const auto rb = train(b, cfg, 17);
  EXPECT_EQ(ra.table, rb.table);
  EXPECT_EQ(ra.rewards, rb.rewards);
  ASSERT_EQ(ra.rewards.size(), 20u);
  for (std::size_t i = 0; i < ra.rewards.size(); ++i) EXPECT_EQ(ra.rewards[i], ra.totals[i].reward);
  for (const auto& [s, row] : ra.table.sorted_rows()) {
    EXPECT_EQ(row->actions, legal_of(model->graph(), s.current));
    EXPECT_TRUE(s.target == model->prep_zone() ||
                model->graph().node(s.target).kind == NodeKind::product_position);
  }
  const auto rc = train(a, cfg, 18);
  EXPECT_NE(ra.rewards, rc.rewards);
}

TEST(Train, RejectsBadConfig) {
  auto model = std::make_shared<const StoreModel>(generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1),
                                                  EnvConfig{});
  StoreEnv env(model);
  TrainConfig cfg;
  cfg.gamma = 1.0;
  EXPECT_THROW(train(env, cfg, 1), ConfigError);
  cfg = TrainConfig{};
  cfg.alpha = 0.0;
  EXPECT_THROW(train(env, cfg, 1), ConfigError);
  cfg = TrainConfig{};
  cfg.epsilon = 1.5;
  EXPECT_THROW(train(env, cfg, 1), ConfigError);
}

TEST(GreedyPath, SameNodeIsEmpty) {
  const QTable t;
  Rng rng(1);
  const auto p = greedy_path(t, test::line_graph(3), 1, 1, 0.0, rng, 5);
  EXPECT_TRUE(p.moves.empty());
  EXPECT_FALSE(p.truncated);
}

TEST(GreedyPath, CycleHitsStepCap) {
  const auto g = test::line_graph(4);
  QTable t;
  t.set(QState{1, 3}, legal_of(g, 1), 0, 50.0);
  t.set(QState{1, 3}, legal_of(g, 1), 2, 10.0);
  t.set(QState{0, 3}, legal_of(g, 0), 1, 50.0);
  Rng rng(1);
  const auto p = greedy_path(t, g, 1, 3, 0.0, rng, 10);
  EXPECT_TRUE(p.truncated);
  EXPECT_EQ(p.moves.size(), 10u);
  EXPECT_EQ(p.moves[0], 0u);
  EXPECT_EQ(p.moves[1], 1u);
  EXPECT_THROW(greedy_path(t, g, 1, 3, 0.0, rng, 0), ContractViolation);
}

TEST(GreedyPath, EmptyStoreLearnsShortestPaths) {
  EnvConfig cfg;
  cfg.lambda_store = 0.0;
  cfg.lambda_online = 2.0;
  cfg.open_time_s = 3600.0;
  auto model = std::make_shared<const StoreModel>(lattice(), cfg);
  StoreEnv env(model);  // ascending-label sequencing is enough here
  TrainConfig tc;
  tc.alpha = 0.5;
  tc.gamma = 0.9;
  tc.epsilon = 0.1;
  tc.episodes = 2000;
  const auto r = train(env, tc, 3);
  const auto& g = model->graph();
  const RoutingTable routes(g, length_weight());
  Rng rng(1);
  for (NodeId target = 0; target < 8; ++target) {
    const auto p = greedy_path(r.table, g, 8, target, 0.0, rng, 50);
    ASSERT_FALSE(p.truncated) << target;
    EXPECT_EQ(p.moves.size(), routes.hops(8, target)) << target;
    EXPECT_EQ(p.moves.back(), target);
  }
}

TEST(QTableFile, RoundTripIsExact) {
  QTable t(0.0, 200.0, 5);
  Rng rng(7);
  const auto g = generate_layout(LayoutSpec::for_size(LayoutSize::tiny), 1);
  for (int i = 0; i < 60; ++i) {
    const NodeId x = NodeId(uniform_index(rng, g.size()));
    const NodeId target = NodeId(uniform_index(rng, g.size()));
    const auto legal = legal_of(g, x);
    t.set(QState{x, target}, legal, legal[uniform_index(rng, legal.size())], (uniform01(rng) - 0.5) * 1e3 / 7.0);
  }
  const auto csv = qtable_to_csv(t);
  EXPECT_EQ(csv.rfind("current,target,action,value\n", 0), 0u);
  const auto back = parse_qtable(csv);
  EXPECT_EQ(back, t);
  EXPECT_EQ(qtable_to_csv(back), csv);

  const auto file = std::filesystem::temp_directory_path() / "diprp_qtable_roundtrip.csv";
  save_qtable(t, file);
  EXPECT_EQ(load_qtable(file), t);
  std::filesystem::remove(file);
}

TEST(QTableFile, EmptyTable) {
  const QTable t;
  EXPECT_EQ(parse_qtable(qtable_to_csv(t)).size(), 0u);
}

TEST(QTableFile, RejectsMalformedFiles) {
  EXPECT_THROW(parse_qtable(""), ParseError);
  EXPECT_THROW(parse_qtable("a,b,c,d\n"), ParseError);
  EXPECT_THROW(parse_qtable("current,target,action,value\n1,2,3\n"), ParseError);
  EXPECT_THROW(parse_qtable("current,target,action,value\n1,2,x,4\n"), ParseError);
  EXPECT_THROW(parse_qtable("current,target,action,value\n1,2,3,4\n1,2,3,5\n"), ParseError);
}
