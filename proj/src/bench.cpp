#include "pilqr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

namespace pilqr {

namespace {

double percentile(std::vector<double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double idx = p * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

BenchStats run_bench(const MonteCarloConfig& mc, const ScenarioConfig& base,
                     int jobs) {
  if (mc.samples < 1) throw std::invalid_argument("bench: samples must be >= 1");
  jobs = std::max(jobs, 1);

  const int horizon =
      static_cast<int>(std::llround(mc.horizon_s / base.dt));
  std::vector<BenchSample> results(mc.samples);
  std::atomic<int> next{0};

  auto worker = [&]() {
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= mc.samples) break;
      BenchSample& out = results[k];
      try {
        const ScenarioConfig scenario = sample_initials(mc, base, k);
        const GameDefinition game = scenario.make_game(horizon);
        const PotentialOcp ocp = build_potential_ocp(game);
        const auto t0 = std::chrono::steady_clock::now();
        const SolveResult sr =
            solve(ocp, scenario.initial_state(), nullptr, scenario.solver);
        out.solve_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
        out.converged = sr.report.converged;
        out.iterations = sr.report.iterations;
        for (std::size_t c = 1; c < sr.report.cost_trace.size(); ++c) {
          if (sr.report.cost_trace[c] > sr.report.cost_trace[c - 1]) {
            out.monotone_trace = false;
          }
        }
      } catch (const std::exception&) {
        out.converged = false;
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BenchStats stats;
  stats.samples = mc.samples;
  stats.seed = mc.seed;
  stats.solve_times_ms.reserve(mc.samples);
  double time_sum = 0.0, iter_sum = 0.0;
  for (const auto& r : results) {
    stats.converged_count += r.converged ? 1 : 0;
    stats.monotone_traces = stats.monotone_traces && r.monotone_trace;
    stats.solve_times_ms.push_back(r.solve_ms);
    time_sum += r.solve_ms;
    iter_sum += r.iterations;
  }
  stats.time_mean_ms = time_sum / mc.samples;
  stats.iter_mean = iter_sum / mc.samples;
  double tvar = 0.0, ivar = 0.0;
  for (const auto& r : results) {
    tvar += (r.solve_ms - stats.time_mean_ms) * (r.solve_ms - stats.time_mean_ms);
    ivar += (r.iterations - stats.iter_mean) * (r.iterations - stats.iter_mean);
  }
  stats.time_std_ms = std::sqrt(tvar / mc.samples);
  stats.iter_std = std::sqrt(ivar / mc.samples);
  std::vector<double> sorted = stats.solve_times_ms;
  std::sort(sorted.begin(), sorted.end());
  stats.time_p50_ms = percentile(sorted, 0.50);
  stats.time_p90_ms = percentile(sorted, 0.90);
  stats.time_p99_ms = percentile(sorted, 0.99);
  return stats;
}

nlohmann::json bench_json(const BenchStats& stats) {
  nlohmann::json j;
  j["deterministic"]["samples"] = stats.samples;
  j["deterministic"]["seed"] = stats.seed;
  j["deterministic"]["converged_count"] = stats.converged_count;
  j["deterministic"]["iter_mean"] = stats.iter_mean;
  j["deterministic"]["iter_std"] = stats.iter_std;
  j["deterministic"]["monotone_traces"] = stats.monotone_traces;
  j["timing_ms"]["mean"] = stats.time_mean_ms;
  j["timing_ms"]["std"] = stats.time_std_ms;
  j["timing_ms"]["p50"] = stats.time_p50_ms;
  j["timing_ms"]["p90"] = stats.time_p90_ms;
  j["timing_ms"]["p99"] = stats.time_p99_ms;
  return j;
}

}  // namespace pilqr
