#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pilqr/scenarios.hpp"

namespace pilqr {

struct BenchSample {
  bool converged = false;
  bool monotone_trace = true;
  int iterations = 0;
  double solve_ms = 0.0;
};

struct BenchStats {
  int samples = 0;
  int converged_count = 0;
  double time_mean_ms = 0.0;
  double time_std_ms = 0.0;
  double time_p50_ms = 0.0;
  double time_p90_ms = 0.0;
  double time_p99_ms = 0.0;
  double iter_mean = 0.0;
  double iter_std = 0.0;
  bool monotone_traces = true;  // every accepted-cost sequence non-increasing
  uint64_t seed = 0;
  std::vector<double> solve_times_ms;  // ordered by sample index
};

/// Runs `mc.samples` independent full-horizon potential solves from seeded
/// random initial conditions of the base scenario. Samples are distributed
/// over `jobs` worker threads; results are aggregated in sample order, so
/// everything except the wall-time fields is independent of `jobs`.
/// Per-sample failures are counted, never fatal.
BenchStats run_bench(const MonteCarloConfig& mc, const ScenarioConfig& base,
                     int jobs);

/// Stats JSON. Wall-time derived fields are outside the determinism
/// guarantee; the deterministic subset is grouped under "deterministic".
nlohmann::json bench_json(const BenchStats& stats);

}  // namespace pilqr
