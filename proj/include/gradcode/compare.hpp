#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradcode/sim.hpp"

namespace gradcode {

struct RunSummary {
  std::string label;
  std::size_t iterations = 0;
  double total_time = 0.0;
  double mean_iteration_time = 0.0;
  double final_loss = 0.0;
  std::optional<double> final_auc;
  double replication_overhead = 0.0;
  // First iteration (1-based) and clock at which loss <= threshold.
  std::optional<std::size_t> iterations_to_threshold;
  std::optional<double> time_to_threshold;
};

// Latest values a run had reported by a given simulated time.
struct TimePoint {
  double time = 0.0;
  std::vector<std::optional<double>> loss;  // one per run
  std::vector<std::optional<double>> auc;
};

struct Comparison {
  double loss_threshold = 0.0;
  std::vector<RunSummary> summary;
  std::vector<const RunResult*> runs;  // borrowed, same order as summary
  std::vector<TimePoint> timeline;
};

// Runs must share the dataset (seed, d, p, holdout split) or MismatchedConfigs
// is thrown. Without an explicit threshold, the highest best-loss among the
// runs is used, so every run reaches it.
Comparison compare_runs(std::span<const RunResult> runs,
                        std::optional<double> loss_threshold = std::nullopt,
                        std::size_t time_points = 50);

// label,iterations,total_time_s,mean_iteration_time_s,final_loss,final_auc,
// replication_overhead,loss_threshold,iterations_to_threshold,time_to_threshold_s
std::string summary_csv(const Comparison& cmp);
// iteration, then <label>_time_s,<label>_loss,<label>_auc per run
std::string iteration_csv(const Comparison& cmp);
// sim_time_s, then <label>_loss,<label>_auc per run
std::string timeline_csv(const Comparison& cmp);

}  // namespace gradcode
