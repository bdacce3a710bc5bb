#include "diprp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "diprp/errors.hpp"
#include "diprp/srp.hpp"

namespace diprp {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1U, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

StoreEnv make_env(std::shared_ptr<const StoreModel> model, RoutingBasis basis,
                  const std::vector<double>& node_traffic) {
  if (basis == RoutingBasis::arc_crowdedness && node_traffic.empty()) {
    throw ConfigError("crowdedness basis needs a calibrated traffic profile");
  }
  auto sequencer = make_srp_sequencer(model->graph(), basis, node_traffic);
  return StoreEnv(std::move(model), std::move(sequencer));
}

EpisodeMetrics run_episode(StoreEnv& env, const Policy& policy, RoutingBasis basis,
                           std::uint64_t env_seed, Rng& rng, std::size_t episode) {
  if (policy.trained_basis() && *policy.trained_basis() != basis) {
    throw ConfigError("QL table trained under the " + std::string(to_string(*policy.trained_basis())) +
                      " basis cannot be evaluated under " + std::string(to_string(basis)));
  }
  env.reset(env_seed);
  while (env.await_decision()) env.step(policy.next_action(env.observe(), rng));
  const auto& t = env.totals();
  return {policy.kind(), basis, episode, t.reward, t.orders, t.products, t.encounters(), t.steps,
          env.truncated()};
}

double convergence_cv(std::span<const double> series, std::size_t window) {
  if (window == 0) throw SizeError("window must be positive");
  if (series.size() < window) {
    throw SizeError("series of " + std::to_string(series.size()) + " values is shorter than the window of " +
                    std::to_string(window));
  }
  const auto tail = series.last(window);
  const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(window);
  double ss = 0.0;
  for (double v : tail) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(window));
  if (sd == 0.0) return 0.0;
  return sd / std::abs(mean);
}

void GridSpec::validate() const {
  if (alphas.empty() || gammas.empty() || epsilons.empty()) {
    throw ConfigError("grid needs at least one alpha, gamma and epsilon");
  }
  if (snapshot_interval == 0) throw ConfigError("snapshot interval must be positive");
  if (cv_window == 0) throw ConfigError("CV window must be positive");
  for (const auto& c : configs()) c.validate();
}

std::vector<TrainConfig> GridSpec::configs() const {
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  std::vector<TrainConfig> out;
  for (double a : sorted(alphas)) {
    for (double g : sorted(gammas)) {
      for (double e : sorted(epsilons)) {
        TrainConfig c;
        c.alpha = a;
        c.gamma = g;
        c.epsilon = e;
        c.episodes = episodes;
        c.convergence_threshold = convergence_threshold;
        out.push_back(c);
      }
    }
  }
  return out;
}

GridReport run_grid(const std::vector<GridInstance>& instances, const GridSpec& grid,
                    std::uint64_t seed) {
  grid.validate();
  const auto configs = grid.configs();
  GridReport report;
  report.runs.resize(instances.size() * configs.size());
  parallel_for(report.runs.size(), [&](std::size_t job) {
    const auto& inst = instances[job / configs.size()];
    const auto& cfg = configs[job % configs.size()];
    StoreEnv env = make_env(inst.model, inst.basis, inst.node_traffic);
    TrainResult trained = train(env, cfg, seed);

    GridRun& run = report.runs[job];
    run.instance = inst.name;
    run.basis = inst.basis;
    run.config = cfg;
    run.rewards = std::move(trained.rewards);
    run.converged = trained.converged;
    run.table = std::move(trained.table);
    const auto& r = run.rewards;
    if (!r.empty()) {
      run.min_reward = *std::min_element(r.begin(), r.end());
      run.max_reward = *std::max_element(r.begin(), r.end());
      run.mean_reward = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
      const std::size_t tail = std::min(grid.cv_window, r.size());
      run.tail_mean = std::accumulate(r.end() - static_cast<std::ptrdiff_t>(tail), r.end(), 0.0) /
                      static_cast<double>(tail);
    }
    run.cv = r.size() >= grid.cv_window ? convergence_cv(r, grid.cv_window)
                                        : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t from = 0; from < r.size(); from += grid.snapshot_interval) {
      const std::size_t to = std::min(r.size(), from + grid.snapshot_interval);
      run.snapshots.push_back(std::accumulate(r.begin() + static_cast<std::ptrdiff_t>(from),
                                              r.begin() + static_cast<std::ptrdiff_t>(to), 0.0) /
                              static_cast<double>(to - from));
    }
  });
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::size_t best = i * configs.size();
    for (std::size_t j = best + 1; j < (i + 1) * configs.size(); ++j) {
      if (report.runs[j].tail_mean > report.runs[best].tail_mean) best = j;
    }
    report.best.push_back(best);
  }
  return report;
}

EvaluationResult evaluate(std::shared_ptr<const StoreModel> model, const EvaluationSpec& spec) {
  if (spec.policies.empty() || spec.bases.empty()) throw ConfigError("nothing to evaluate");
  if (spec.episodes == 0) throw ConfigError("evaluation needs at least one episode");
  for (auto kind : spec.policies) {
    if (kind != PolicyKind::ql) continue;
    for (auto basis : spec.bases) {
      const auto it = spec.tables.find(basis);
      if (it == spec.tables.end() || !it->second) {
        throw ConfigError("no QL table trained for the " + std::string(to_string(basis)) + " basis");
      }
    }
  }

  EvaluationResult result;
  result.node_traffic = spec.node_traffic;
  const bool needs_traffic =
      std::find(spec.policies.begin(), spec.policies.end(), PolicyKind::cn) != spec.policies.end() ||
      std::find(spec.bases.begin(), spec.bases.end(), RoutingBasis::arc_crowdedness) != spec.bases.end();
  if (needs_traffic && result.node_traffic.empty()) {
    result.node_traffic = calibrate_traffic(model, spec.calibration_episodes, spec.seed);
  }

  const auto& graph = model->graph();
  struct Job {
    PolicyKind kind;
    RoutingBasis basis;
  };
  std::vector<Job> jobs;
  for (auto kind : spec.policies) {
    for (auto basis : spec.bases) jobs.push_back({kind, basis});
  }
  const std::size_t n = spec.episodes;
  result.episodes.resize(jobs.size() * n);
  if (spec.keep_traces) result.traces.resize(jobs.size() * n);

  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [kind, basis] = jobs[j];
    const Policy policy = [&, kind = kind, basis = basis] {
      switch (kind) {
        case PolicyKind::sp: return Policy::shortest_path(graph);
        case PolicyKind::mp: return Policy::myopic(graph);
        case PolicyKind::cn: return Policy::crowded_nodes(graph, result.node_traffic);
        case PolicyKind::ql: break;
      }
      return Policy::q_learning(spec.tables.at(basis), basis, spec.eval_epsilon);
    }();
    StoreEnv env = make_env(model, basis, result.node_traffic);
    env.record_trace(spec.keep_traces);
    for (std::size_t ep = 0; ep < n; ++ep) {
      Rng rng = make_rng(spec.seed, Stream::exploration, ep);
      result.episodes[j * n + ep] =
          run_episode(env, policy, basis, derive_seed(spec.seed, Stream::episode, ep), rng, ep);
      if (spec.keep_traces) result.traces[j * n + ep] = env.trace();
    }
  });
  result.summary = summarize(result.episodes);
  return result;
}

std::vector<PolicySummary> summarize(std::span<const EpisodeMetrics> episodes) {
  std::vector<PolicySummary> out;
  for (const auto& m : episodes) {
    auto it = std::find_if(out.begin(), out.end(), [&](const PolicySummary& s) {
      return s.policy == m.policy && s.basis == m.basis;
    });
    if (it == out.end()) {
      out.push_back({m.policy, m.basis});
      it = out.end() - 1;
    }
    ++it->episodes;
    it->reward += m.reward;
    it->orders += static_cast<double>(m.orders);
    it->products += static_cast<double>(m.products);
    it->encounters += static_cast<double>(m.encounters);
    it->steps += static_cast<double>(m.steps);
  }
  for (auto& s : out) {
    const auto k = static_cast<double>(s.episodes);
    s.reward /= k;
    s.orders /= k;
    s.products /= k;
    s.encounters /= k;
    s.steps /= k;
  }
  return out;
}

double bootstrap_mean_quantile(std::span<const double> values, double quantile, std::size_t resamples,
                               std::uint64_t seed) {
  if (values.empty()) throw SizeError("bootstrap needs at least one value");
  if (resamples == 0 || !(quantile >= 0.0 && quantile <= 1.0)) {
    throw ConfigError("bootstrap needs resamples > 0 and a quantile in [0, 1]");
  }
  Rng rng = make_rng(seed, Stream::bootstrap);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[uniform_index(rng, values.size())];
    m = sum / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const auto at = static_cast<std::size_t>(std::floor(quantile * static_cast<double>(resamples - 1)));
  return means[at];
}

namespace {

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

}  // namespace

std::string metrics_csv(std::span<const EpisodeMetrics> episodes) {
  std::string out = "policy,basis,episode,reward,orders,products,encounters,steps\n";
  for (const auto& m : episodes) {
    out += format("%s,%s,%zu,%.17g,%llu,%llu,%llu,%llu\n", std::string(to_string(m.policy)).c_str(),
                  std::string(to_string(m.basis)).c_str(), m.episode, m.reward,
                  static_cast<unsigned long long>(m.orders), static_cast<unsigned long long>(m.products),
                  static_cast<unsigned long long>(m.encounters), static_cast<unsigned long long>(m.steps));
  }
  return out;
}

std::string summary_csv(std::span<const PolicySummary> summary) {
  std::string out = "policy,basis,episodes,reward,orders,products,encounters,steps\n";
  for (const auto& s : summary) {
    out += format("%s,%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", std::string(to_string(s.policy)).c_str(),
                  std::string(to_string(s.basis)).c_str(), s.episodes, s.reward, s.orders, s.products,
                  s.encounters, s.steps);
  }
  return out;
}

std::string trace_csv(std::span<const TraceRow> trace) {
  std::string out = "epoch,t,node,action,phi1,phi2,phi3,phi4,reward,order_done\n";
  for (const auto& r : trace) {
    out += format("%llu,%.17g,%u,%u,%d,%d,%d,%d,%.17g,%d\n", static_cast<unsigned long long>(r.epoch), r.t,
                  r.node, r.action, r.features.steps, r.features.co_located, r.features.visible,
                  r.features.picks, r.reward, r.order_done ? 1 : 0);
  }
  return out;
}

std::string grid_csv(const GridReport& report) {
  std::string out = "instance,basis,alpha,gamma,epsilon,episodes,min,avg,max,tail_mean,cv,best\n";
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const auto& r = report.runs[i];
    const bool best = std::find(report.best.begin(), report.best.end(), i) != report.best.end();
    out += format("%s,%s,%g,%g,%g,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", r.instance.c_str(),
                  std::string(to_string(r.basis)).c_str(), r.config.alpha, r.config.gamma, r.config.epsilon,
                  r.rewards.size(), r.min_reward, r.mean_reward, r.max_reward, r.tail_mean, r.cv, best ? 1 : 0);
  }
  return out;
}

std::string rewards_csv(std::span<const EpisodeTotals> totals) {
  std::string out = "episode,reward,orders,products,encounters,steps\n";
  for (std::size_t i = 0; i < totals.size(); ++i) {
    const auto& t = totals[i];
    out += format("%zu,%.17g,%llu,%llu,%llu,%llu\n", i, t.reward, static_cast<unsigned long long>(t.orders),
                  static_cast<unsigned long long>(t.products), static_cast<unsigned long long>(t.encounters()),
                  static_cast<unsigned long long>(t.steps));
  }
  return out;
}

std::string heatmap_csv(const StoreGraph& graph, std::span<const double> node_traffic) {
  std::string out = "node,kind,x,y,traffic\n";
  for (const auto& node : graph.nodes()) {
    out += format("%u,%s,%g,%g,%.9f\n", node.id, std::string(to_string(node.kind)).c_str(), node.x, node.y,
                  node_traffic[node.id]);
  }
  return out;
}

std::vector<double> emit_heatmap(std::shared_ptr<const StoreModel> model, std::size_t episodes,
                                 std::uint64_t seed, const std::filesystem::path& file) {
  auto traffic = calibrate_traffic(model, episodes, seed);
  write_text(file, heatmap_csv(model->graph(), traffic));
  return traffic;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
}

}  // namespace diprp
