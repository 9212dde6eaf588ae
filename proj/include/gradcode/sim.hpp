#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gradcode/codec.hpp"
#include "gradcode/learn.hpp"
#include "gradcode/partial.hpp"

namespace gradcode {

enum class StrategyKind { Naive, IgnoreS, Coded, PartialCoded };

// How the aggregator assembles a gradient each iteration.
class Strategy {
 public:
  static Strategy naive(std::size_t n);
  static Strategy ignore(std::size_t n, std::size_t s);
  // Throws SpanFailure unless the code passes verify_bspan.
  static Strategy coded(GradientCode code);
  static Strategy partial(TwoStagePlan plan);

  StrategyKind kind() const noexcept { return kind_; }
  std::size_t workers() const noexcept { return n_; }
  std::size_t stragglers() const noexcept { return s_; }
  const GradientCode* code() const noexcept;
  const TwoStagePlan* plan() const noexcept { return plan_ ? &*plan_ : nullptr; }

  // Number of data partitions the dataset must be cut into.
  std::size_t partition_count() const;
  // Partitions worker w processes, naive stage first for PartialCoded.
  std::vector<std::size_t> naive_partitions(std::size_t w) const;
  std::vector<std::size_t> coded_partitions(std::size_t w) const;

  // naive, ignore, frac, cyc, custom, partial-frac, partial-cyc
  std::string label() const;
  // Per-worker data share times n, minus one.
  double replication_overhead() const;

 private:
  StrategyKind kind_ = StrategyKind::Naive;
  std::size_t n_ = 0;
  std::size_t s_ = 0;
  std::optional<GradientCode> code_;
  std::optional<TwoStagePlan> plan_;
};

struct LatencyModel {
  // Seconds to process d/n rows on a healthy worker; partitions of other
  // sizes scale by row count.
  double compute_time_per_partition = 1.0;
  double comm_time = 0.1;   // per message
  // Multiplicative lognormal noise exp(sigma Z) on each worker's compute time,
  // one draw per worker per iteration. 0 disables it. 0.978 puts ~5% of draws
  // above 5x the median.
  double jitter_sigma = 0.0;

  void validate() const;
};

inline constexpr double kHeavyTailJitterSigma = 0.978;

enum class StragglerMode { None, FixedSet, RandomPerIteration };
enum class StragglerKind { FullDelay, PartialSlowdown };

struct StragglerPolicy {
  StragglerMode mode = StragglerMode::None;
  std::vector<std::size_t> workers;  // FixedSet
  std::size_t count = 0;             // RandomPerIteration
  StragglerKind kind = StragglerKind::FullDelay;
  double delay = 0.0;  // FullDelay extra seconds; may be +infinity
  double alpha = 2.0;  // PartialSlowdown factor

  void validate(std::size_t n) const;
};

enum class MessageKind { NaiveSum = 0, Coded = 1 };

// One worker-to-aggregator message. Ordered by (time, worker, kind).
struct Message {
  double time = 0.0;
  std::size_t worker = 0;
  MessageKind kind = MessageKind::Coded;

  friend bool operator<(const Message& a, const Message& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.worker != b.worker) return a.worker < b.worker;
    return a.kind < b.kind;
  }
};

enum class GradientKind { Exact, PartialSum };

struct IterationTrace {
  std::size_t iteration = 0;
  double duration = 0.0;  // simulated seconds until the aggregator had enough
  double clock = 0.0;     // cumulative simulated seconds at completion
  std::vector<std::size_t> stragglers;
  std::vector<std::size_t> survivors;  // workers whose (coded) messages were used
  GradientKind gradient_kind = GradientKind::Exact;
  std::vector<Message> events;         // every message, sorted, including late ones
  double loss = 0.0;
  std::optional<double> auc;
};

// Per-run random streams, advanced once per iteration.
struct IterationStreams {
  Rng latency;
  Rng straggler;
};

struct IterationOptions {
  bool check_exactness = false;  // compare decoded gradients with the plain sum
  double tol = kDefaultTol;
};

struct IterationOutcome {
  Vec gradient;
  IterationTrace trace;
};

// Simulates one synchronous round at `point`. `data` must be cut into
// strategy.partition_count() partitions. Fills every trace field except
// iteration, clock, loss and auc.
IterationOutcome run_iteration(const Strategy& strategy, const LatencyModel& latency,
                               const StragglerPolicy& policy, const Dataset& data,
                               std::span<const double> point, IterationStreams& streams,
                               DecodeCache& cache, const IterationOptions& options = {});

struct SeedBundle {
  std::uint64_t scheme = 0;
  std::uint64_t data = 0;
  std::uint64_t latency = 0;
  std::uint64_t straggler = 0;

  // Sub-seeds at fixed offsets from one value.
  static SeedBundle derive(std::uint64_t base) { return {base, base + 1, base + 2, base + 3}; }
  friend bool operator==(const SeedBundle&, const SeedBundle&) = default;
};

struct DatasetSpec {
  std::size_t d = 10'000;
  std::size_t p = 100;
  double holdout_fraction = 0.2;
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::Naive;
  CodeKind code = CodeKind::FracRep;  // Coded and PartialCoded
  std::size_t n = 12;
  std::size_t s = 0;
  double alpha = 2.0;  // PartialCoded
};

struct RunConfig {
  StrategySpec strategy;
  LatencyModel latency;
  StragglerPolicy stragglers;
  OptimizerConfig optimizer;
  DatasetSpec dataset;
  SeedBundle seeds;
  std::size_t auc_interval = 10;  // 0: only after the last iteration
  bool check_exactness = false;

  void validate() const;
};

struct RunResult {
  RunConfig config;
  std::string label;
  double replication_overhead = 0.0;
  std::vector<IterationTrace> traces;
  Vec final_model;

  double total_time() const noexcept { return traces.empty() ? 0.0 : traces.back().clock; }
};

// Generates the synthetic dataset and its 80/20 split from one seed.
TrainHoldout make_data(const DatasetSpec& spec, std::uint64_t seed);
Strategy make_strategy(const StrategySpec& spec, std::uint64_t scheme_seed);

RunResult run_training(const RunConfig& config);
// Same, on pre-generated data (which must come from config.dataset and
// config.seeds.data for results to be reproducible from the config alone).
RunResult run_training(const RunConfig& config, const TrainHoldout& data);

// CSV: iteration,sim_time_s,loss,auc,survivors,strategy
std::string run_csv(const RunResult& run);

}  // namespace gradcode
