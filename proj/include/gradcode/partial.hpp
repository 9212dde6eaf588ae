#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gradcode/codec.hpp"

namespace gradcode {

// Two-stage split for alpha-partial stragglers. Data is cut into
// naive_partitions_total + n partitions: indices [0, naive_partitions_total)
// are naive (each held by exactly one worker), the last n are coded with
// `coded` (partition naive_partitions_total + j is coded partition j).
struct TwoStagePlan {
  std::size_t n = 0;
  std::size_t s = 0;
  double alpha = 0.0;
  std::size_t naive_per_worker = 0;
  std::size_t naive_partitions_total = 0;
  std::size_t coded_partitions_total = 0;
  GradientCode coded;
  std::vector<std::vector<std::size_t>> naive_assignment;

  std::size_t total_partitions() const noexcept {
    return naive_partitions_total + coded_partitions_total;
  }
  // Fraction of all partitions a single worker processes.
  double worker_fraction() const noexcept {
    return static_cast<double>(naive_per_worker + s + 1) /
           static_cast<double>(total_partitions());
  }
};

// kind must be FracRep or CycRep; `seed` only matters for CycRep.
// naive_per_worker = ceil((s+1)/(alpha-1)), treating quotients within 1e-9 of
// an integer as that integer.
TwoStagePlan plan_partial(std::size_t n, std::size_t s, double alpha, CodeKind kind,
                          std::uint64_t seed = 0);

// (s+1) * alpha / (n * (s + alpha)), the unrounded per-worker data fraction.
double load_fraction(std::size_t n, std::size_t s, double alpha);

// Timing in units of one partition's compute time on a non-straggler.
inline double straggler_naive_time(const TwoStagePlan& p) {
  return p.alpha * static_cast<double>(p.naive_per_worker);
}
inline double non_straggler_total_time(const TwoStagePlan& p) {
  return static_cast<double>(p.naive_per_worker + p.s + 1);
}

}  // namespace gradcode
