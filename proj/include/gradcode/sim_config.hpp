#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gradcode/sim.hpp"

namespace gradcode {

// Run configuration document: a flat JSON object. Unknown fields are
// rejected, and seeds must be explicit (seed_all or all four sub-seeds;
// individual sub-seeds override the seed_all derivation).
//
//   strategy        naive | ignore | frac | cyc | partial-frac | partial-cyc
//   n, s, alpha     workers, straggler tolerance, partial slowdown factor
//   d, p, holdout_fraction
//   iterations, optimizer (nag | gd), eta, c1, c2
//   compute_time, comm_time, jitter_sigma
//   straggler_mode (none | fixed | random), straggler_workers, straggler_count,
//   straggler_kind (full | partial), straggler_delay (number or "inf"),
//   straggler_alpha
//   seed_all, seed_scheme, seed_data, seed_latency, seed_straggler
//   auc_interval, check_exactness
RunConfig run_config_from_json(std::string_view text);
std::string run_config_to_json(const RunConfig& config);

// Comparison bundle: {"base": {...}, "runs": [{...}, ...]} where each run
// entry overrides fields of base. Every member is fully validated.
std::vector<RunConfig> compare_bundle_from_json(std::string_view text);

std::string strategy_name(const StrategySpec& spec);

}  // namespace gradcode
