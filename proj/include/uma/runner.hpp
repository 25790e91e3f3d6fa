#pragma once

#include <string>
#include <vector>

#include "uma/config.hpp"
#include "uma/result_cache.hpp"

// Experiment orchestration: figure-preset sweeps, per-curve CSV emission,
// result caching, and the run manifest. All numeric formatting is fixed so
// reruns with the same configuration and seed are byte-identical.

namespace uma {

struct RunnerOptions {
    double budget_seconds = 0.0;  // 0 = unlimited; checked between sweep points
    bool verbose = true;
};

struct SweepFileReport {
    std::string path;
    int rows = 0;
};

struct SweepReport {
    std::vector<SweepFileReport> files;
    std::string manifest_path;
    int points_computed = 0;
    int points_from_cache = 0;
    int points_skipped_budget = 0;
};

SweepReport run_experiment(const ExperimentSpec& spec, const RunnerOptions& opts = {});

// Single-point entries used by the evaluate/optimize CLI verbs.
std::string evaluate_point_json(const ExperimentSpec& spec, long long K);
std::string optimize_point_json(const ExperimentSpec& spec, long long K,
                                const RunnerOptions& opts = {});

}  // namespace uma
