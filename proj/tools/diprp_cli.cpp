// Command-line front end: instance generation, training, evaluation, SRP
// solving and traffic heatmaps.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "diprp/config.hpp"
#include "diprp/errors.hpp"
#include "diprp/harness.hpp"
#include "diprp/instance_gen.hpp"
#include "diprp/layout_io.hpp"
#include "diprp/policies.hpp"
#include "diprp/qlearning.hpp"
#include "diprp/srp.hpp"

namespace fs = std::filesystem;
using namespace diprp;

namespace {

struct Shared {
  std::string layout;
  std::string config;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::size_t calibration_episodes = 50;
};

void add_shared(CLI::App* cmd, Shared& s, bool needs_layout = true) {
  auto* layout = cmd->add_option("--layout", s.layout, "layout JSON file");
  if (needs_layout) layout->required()->check(CLI::ExistingFile);
  cmd->add_option("--config", s.config, "environment config JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", s.seed, "root seed");
  cmd->add_option("--out-dir", s.out_dir, "output directory");
}

std::shared_ptr<const StoreModel> load_model(const Shared& s) {
  const EnvConfig cfg = s.config.empty() ? EnvConfig{} : load_config(s.config);
  return std::make_shared<const StoreModel>(load_layout(s.layout), cfg);
}

std::vector<double> traffic_for(const std::shared_ptr<const StoreModel>& model, const Shared& s) {
  return calibrate_traffic(model, s.calibration_episodes, s.seed);
}

fs::path out_path(const Shared& s, const std::string& name) { return fs::path(s.out_dir) / name; }

std::vector<NodeId> parse_products(const std::string& text) {
  std::vector<NodeId> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const unsigned long v = std::stoul(item, &used);
    if (used != item.size()) throw ConfigError("bad product id '" + item + "'");
    out.push_back(static_cast<NodeId>(v));
  }
  if (out.empty()) throw ConfigError("--products needs at least one node id");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic in-store picker routing: simulation, Q-learning and SRP tools"};
  app.require_subcommand(1);

  // generate-instance
  Shared gen;
  std::string size = "tiny";
  std::string concentration = "entrance";
  auto* generate = app.add_subcommand("generate-instance", "write a synthetic layout and config");
  add_shared(generate, gen, false);
  generate->add_option("--size", size, "tiny|small|medium|large");
  generate->add_option("--concentration", concentration, "entrance|middle|back|uniform");

  // train
  Shared tr;
  TrainConfig train_cfg;
  std::string train_basis = "distance";
  bool grid = false;
  auto* train_cmd = app.add_subcommand("train", "train a Q-table (or the full parameter grid)");
  add_shared(train_cmd, tr);
  train_cmd->add_option("--episodes", train_cfg.episodes, "training episodes");
  train_cmd->add_option("--alpha", train_cfg.alpha, "learning rate");
  train_cmd->add_option("--gamma", train_cfg.gamma, "discount factor");
  train_cmd->add_option("--epsilon", train_cfg.epsilon, "exploration probability");
  train_cmd->add_option("--threshold", train_cfg.convergence_threshold, "max |dQ| convergence threshold");
  train_cmd->add_option("--basis", train_basis, "distance|crowdedness");
  train_cmd->add_option("--calibration-episodes", tr.calibration_episodes, "episodes for traffic calibration");
  train_cmd->add_flag("--grid", grid, "run the alpha x gamma grid and keep the best table");

  // evaluate
  Shared ev;
  std::vector<std::string> policies{"ql", "sp", "mp", "cn"};
  std::vector<std::string> bases{"distance", "crowdedness"};
  std::size_t eval_episodes = 100;
  double eval_epsilon = 0.01;
  std::string qtable_dir;
  bool traces = false;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate policies under routing bases");
  add_shared(evaluate_cmd, ev);
  evaluate_cmd->add_option("--policy", policies, "ql|sp|mp|cn (repeatable)");
  evaluate_cmd->add_option("--basis", bases, "distance|crowdedness (repeatable)");
  evaluate_cmd->add_option("--episodes", eval_episodes, "evaluation episodes per policy and basis");
  evaluate_cmd->add_option("--eval-epsilon", eval_epsilon, "exploration kept by QL at evaluation");
  evaluate_cmd->add_option("--qtable-dir", qtable_dir, "directory with qtable_<basis>.csv (default: out-dir)");
  evaluate_cmd->add_option("--calibration-episodes", ev.calibration_episodes, "episodes for traffic calibration");
  evaluate_cmd->add_flag("--traces", traces, "also write per-episode step traces");

  // solve-srp
  Shared srp;
  std::string products;
  std::string srp_basis = "distance";
  auto* srp_cmd = app.add_subcommand("solve-srp", "sequence one order; prints a JSON object");
  add_shared(srp_cmd, srp);
  srp_cmd->add_option("--products", products, "comma-separated picking node ids")->required();
  srp_cmd->add_option("--basis", srp_basis, "distance|crowdedness");
  srp_cmd->add_option("--calibration-episodes", srp.calibration_episodes, "episodes for traffic calibration");

  // heatmap
  Shared hm;
  std::size_t heat_episodes = 50;
  auto* heat_cmd = app.add_subcommand("heatmap", "average customer presence per node");
  add_shared(heat_cmd, hm);
  heat_cmd->add_option("--episodes", heat_episodes, "customer-only episodes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      const LayoutSpec spec = LayoutSpec::for_size(parse_layout_size(size));
      EnvConfig cfg;
      cfg.concentration = parse_concentration(concentration);
      const StoreGraph graph = generate_layout(spec, gen.seed);
      fs::create_directories(gen.out_dir);
      save_layout(graph, out_path(gen, "layout.json"));
      write_text(out_path(gen, "config.json"), config_to_json(cfg));
      std::printf("wrote %s and %s (%zu nodes)\n", out_path(gen, "layout.json").c_str(),
                  out_path(gen, "config.json").c_str(), graph.size());
    } else if (*train_cmd) {
      const auto model = load_model(tr);
      const RoutingBasis basis = parse_basis(train_basis);
      std::vector<double> traffic;
      if (basis == RoutingBasis::arc_crowdedness) traffic = traffic_for(model, tr);
      const std::string tag(to_string(basis));
      fs::create_directories(tr.out_dir);
      if (grid) {
        GridSpec spec;
        spec.episodes = train_cfg.episodes;
        spec.epsilons = {train_cfg.epsilon};
        spec.convergence_threshold = train_cfg.convergence_threshold;
        const auto report = run_grid({{tr.layout, model, basis, traffic}}, spec, tr.seed);
        const auto& best = report.runs[report.best.front()];
        write_text(out_path(tr, "grid_" + tag + ".csv"), grid_csv(report));
        save_qtable(best.table, out_path(tr, "qtable_" + tag + ".csv"));
        std::printf("best alpha=%g gamma=%g epsilon=%g tail mean %.3f cv %.4f\n", best.config.alpha,
                    best.config.gamma, best.config.epsilon, best.tail_mean, best.cv);
      } else {
        StoreEnv env = make_env(model, basis, traffic);
        const auto result = train(env, train_cfg, tr.seed);
        save_qtable(result.table, out_path(tr, "qtable_" + tag + ".csv"));
        write_text(out_path(tr, "rewards_" + tag + ".csv"), rewards_csv(result.totals));
        std::printf("trained %zu episodes (%s), %zu states\n", result.rewards.size(),
                    result.converged ? "converged" : "episode budget used", result.table.size());
      }
    } else if (*evaluate_cmd) {
      const auto model = load_model(ev);
      EvaluationSpec spec;
      spec.policies.clear();
      for (const auto& p : policies) spec.policies.push_back(parse_policy(p));
      spec.bases.clear();
      for (const auto& b : bases) spec.bases.push_back(parse_basis(b));
      spec.episodes = eval_episodes;
      spec.seed = ev.seed;
      spec.eval_epsilon = eval_epsilon;
      spec.calibration_episodes = ev.calibration_episodes;
      spec.keep_traces = traces;
      const fs::path tables = qtable_dir.empty() ? fs::path(ev.out_dir) : fs::path(qtable_dir);
      for (auto b : spec.bases) {
        const fs::path file = tables / ("qtable_" + std::string(to_string(b)) + ".csv");
        if (fs::exists(file)) spec.tables[b] = std::make_shared<const QTable>(load_qtable(file));
      }
      const auto result = evaluate(model, spec);
      write_text(out_path(ev, "metrics.csv"), metrics_csv(result.episodes));
      write_text(out_path(ev, "summary.csv"), summary_csv(result.summary));
      if (traces) {
        for (std::size_t i = 0; i < result.episodes.size(); ++i) {
          const auto& m = result.episodes[i];
          write_text(out_path(ev, "traces/" + std::string(to_string(m.policy)) + "_" +
                                      std::string(to_string(m.basis)) + "_" + std::to_string(m.episode) + ".csv"),
                     trace_csv(result.traces[i]));
        }
      }
      std::cout << summary_csv(result.summary);
    } else if (*srp_cmd) {
      const auto model = load_model(srp);
      const RoutingBasis basis = parse_basis(srp_basis);
      std::vector<double> traffic;
      if (basis == RoutingBasis::arc_crowdedness) traffic = traffic_for(model, srp);
      const auto& g = model->graph();
      const auto instance =
          build_instance(g, parse_products(products), basis, traffic, g.start_depot(), g.end_depot());
      const auto sol = solve_cutting_planes(instance);
      nlohmann::ordered_json out;
      out["basis"] = std::string(to_string(basis));
      out["sequence"] = sol.sequence;
      out["cost"] = sol.cost;
      out["iterations"] = sol.iterations;
      out["cuts"] = sol.cuts;
      std::cout << out.dump() << "\n";
    } else if (*heat_cmd) {
      const auto model = load_model(hm);
      const auto file = out_path(hm, "heatmap.csv");
      emit_heatmap(model, heat_episodes, hm.seed, file);
      std::printf("wrote %s\n", file.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
