#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "diprp/policies.hpp"
#include "diprp/qlearning.hpp"
#include "diprp/store_env.hpp"

namespace diprp {

struct EpisodeMetrics {
  PolicyKind policy = PolicyKind::sp;
  RoutingBasis basis = RoutingBasis::arc_distance;
  std::size_t episode = 0;
  double reward = 0.0;
  std::uint64_t orders = 0;
  std::uint64_t products = 0;
  std::uint64_t encounters = 0;  // co-located plus visible customers, summed over steps
  std::uint64_t steps = 0;
  bool truncated = false;
};

struct PolicySummary {
  PolicyKind policy = PolicyKind::sp;
  RoutingBasis basis = RoutingBasis::arc_distance;
  std::size_t episodes = 0;
  double reward = 0.0;
  double orders = 0.0;
  double products = 0.0;
  double encounters = 0.0;
  double steps = 0.0;
};

/// Runs `fn(i)` for i in [0, n) on a small thread pool and rethrows the first
/// failure.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Environment whose orders are sequenced by the SRP solver under `basis`.
StoreEnv make_env(std::shared_ptr<const StoreModel> model, RoutingBasis basis,
                  const std::vector<double>& node_traffic = {});

/// Plays one opening day with `policy`; customer and order streams depend
/// only on `env_seed`.
EpisodeMetrics run_episode(StoreEnv& env, const Policy& policy, RoutingBasis basis,
                           std::uint64_t env_seed, Rng& rng, std::size_t episode = 0);

/// Population standard deviation over |mean| of the last `window` values.
/// Throws SizeError when the series is shorter than the window.
double convergence_cv(std::span<const double> series, std::size_t window = 50);

struct GridSpec {
  std::vector<double> alphas{0.95, 0.97, 0.99};
  std::vector<double> gammas{0.5, 0.7, 0.9};
  std::vector<double> epsilons{0.01};
  std::size_t episodes = 1000;
  std::size_t snapshot_interval = 100;
  double convergence_threshold = 1e-3;
  std::size_t cv_window = 50;

  void validate() const;
  /// Every (alpha, gamma, epsilon) combination in ascending order.
  std::vector<TrainConfig> configs() const;
};

struct GridInstance {
  std::string name;
  std::shared_ptr<const StoreModel> model;
  RoutingBasis basis = RoutingBasis::arc_distance;
  std::vector<double> node_traffic;  // needed for the crowdedness basis
};

struct GridRun {
  std::string instance;
  RoutingBasis basis = RoutingBasis::arc_distance;
  TrainConfig config;
  std::vector<double> rewards;
  std::vector<double> snapshots;  // mean reward of each snapshot interval
  double min_reward = 0.0;
  double mean_reward = 0.0;
  double max_reward = 0.0;
  double tail_mean = 0.0;  // mean over the last cv_window episodes
  double cv = 0.0;         // NaN when the series is shorter than the window
  bool converged = false;
  QTable table;
};

struct GridReport {
  std::vector<GridRun> runs;       // instance-major, configs ascending
  std::vector<std::size_t> best;   // per instance, index into runs
};

/// Trains every configuration on every instance from the same seed. The best
/// configuration of an instance has the largest tail mean; ties go to the
/// smallest (alpha, gamma, epsilon).
GridReport run_grid(const std::vector<GridInstance>& instances, const GridSpec& grid,
                    std::uint64_t seed);

struct EvaluationSpec {
  std::vector<PolicyKind> policies{PolicyKind::ql, PolicyKind::sp, PolicyKind::mp, PolicyKind::cn};
  std::vector<RoutingBasis> bases{RoutingBasis::arc_distance, RoutingBasis::arc_crowdedness};
  std::size_t episodes = 100;
  std::uint64_t seed = 1;
  /// QL tables keyed by the basis they were trained under.
  std::map<RoutingBasis, std::shared_ptr<const QTable>> tables;
  std::vector<double> node_traffic;  // calibrated when empty
  std::size_t calibration_episodes = 50;
  double eval_epsilon = 0.01;
  bool keep_traces = false;
};

struct EvaluationResult {
  std::vector<EpisodeMetrics> episodes;  // job-major: policies outer, bases inner
  std::vector<PolicySummary> summary;
  std::vector<std::vector<TraceRow>> traces;  // parallel to episodes when kept
  std::vector<double> node_traffic;
};

/// Every policy under every basis on shared per-episode seeds. Throws
/// ConfigError when QL is requested for a basis without a table.
EvaluationResult evaluate(std::shared_ptr<const StoreModel> model, const EvaluationSpec& spec);

std::vector<PolicySummary> summarize(std::span<const EpisodeMetrics> episodes);

/// Lower `quantile` of the bootstrap distribution of the mean of `values`.
double bootstrap_mean_quantile(std::span<const double> values, double quantile, std::size_t resamples,
                               std::uint64_t seed);

std::string metrics_csv(std::span<const EpisodeMetrics> episodes);
std::string summary_csv(std::span<const PolicySummary> summary);
std::string trace_csv(std::span<const TraceRow> trace);
std::string grid_csv(const GridReport& report);
std::string rewards_csv(std::span<const EpisodeTotals> totals);

/// Per-node average customer presence as `node,kind,x,y,traffic`.
std::vector<double> emit_heatmap(std::shared_ptr<const StoreModel> model, std::size_t episodes,
                                 std::uint64_t seed, const std::filesystem::path& file);
std::string heatmap_csv(const StoreGraph& graph, std::span<const double> node_traffic);

void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace diprp
