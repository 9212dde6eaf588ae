#include "gradcode/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "gradcode/combinatorics.hpp"
#include "gradcode/error.hpp"
#include "gradcode/scheme_io.hpp"

namespace gradcode {

namespace {


[[noreturn]] void invalid(const std::string& msg) { throw Error(Errc::InvalidArgument, msg); }

std::vector<std::size_t> pick_stragglers(const StragglerPolicy& policy, std::size_t n, Rng& rng) {
  switch (policy.mode) {
    case StragglerMode::None: return {};
    case StragglerMode::FixedSet: {
      auto out = policy.workers;
      std::sort(out.begin(), out.end());
      return out;
    }
    case StragglerMode::RandomPerIteration: {
      // Partial Fisher-Yates: uniform without replacement.
      std::vector<std::size_t> pool(n);
      for (std::size_t i = 0; i < n; ++i) pool[i] = i;
      for (std::size_t i = 0; i < policy.count; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
      std::vector<std::size_t> out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(policy.count));
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  return {};
}

void add_scaled(Vec& acc, std::span<const double> v, double scale) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * v[i];
}

double relative_gap(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  return diff / std::max(inf_norm(b), 1e-12);
}

// Decoded sum over coded partitions from the first n-s coded messages.
Vec decode_coded(const GradientCode& code, const std::vector<std::size_t>& first_coded,
                 const std::vector<Vec>& coded_grads, DecodeCache& cache, double tol,
                 std::vector<std::size_t>& survivors_out) {
  const SurvivorSet survivors = SurvivorSet::of(first_coded, code.workers());
  const DecodeRow row = decode_row(code, survivors, cache, tol);
  const std::size_t p = coded_grads.front().size();
  Vec out(p, 0.0);
  for (std::size_t t = 0; t < survivors.size(); ++t) {
    const std::size_t w = survivors.indices()[t];
    // Worker w transmits b_w * g_bar.
    Vec message(p, 0.0);
    for (std::size_t j : code.assignment(w)) add_scaled(message, coded_grads[j], code.encoding()(w, j));
    add_scaled(out, message, row.coeffs[t]);
  }
  survivors_out = survivors.indices();
  return out;
}

}  // namespace

Strategy Strategy::naive(std::size_t n) {
  if (n == 0) invalid("naive strategy needs n >= 1");
  Strategy st;
  st.kind_ = StrategyKind::Naive;
  st.n_ = n;
  return st;
}

Strategy Strategy::ignore(std::size_t n, std::size_t s) {
  if (n == 0 || s >= n) invalid("ignore strategy needs 0 <= s < n");
  Strategy st;
  st.kind_ = StrategyKind::IgnoreS;
  st.n_ = n;
  st.s_ = s;
  return st;
}

Strategy Strategy::coded(GradientCode code) {
  if (binomial(code.workers(), code.stragglers()) <= kDefaultEnumerationBudget &&
      !verify_bspan(code).ok)
    throw Error(Errc::SpanFailure, "code fails the B-Span condition for s=" +
                                       std::to_string(code.stragglers()));
  Strategy st;
  st.kind_ = StrategyKind::Coded;
  st.n_ = code.workers();
  st.s_ = code.stragglers();
  st.code_ = std::move(code);
  return st;
}

Strategy Strategy::partial(TwoStagePlan plan) {
  Strategy st;
  st.kind_ = StrategyKind::PartialCoded;
  st.n_ = plan.n;
  st.s_ = plan.s;
  st.plan_ = std::move(plan);
  return st;
}

const GradientCode* Strategy::code() const noexcept {
  if (code_) return &*code_;
  if (plan_) return &plan_->coded;
  return nullptr;
}

std::size_t Strategy::partition_count() const {
  switch (kind_) {
    case StrategyKind::Naive:
    case StrategyKind::IgnoreS: return n_;
    case StrategyKind::Coded: return code_->partitions();
    case StrategyKind::PartialCoded: return plan_->total_partitions();
  }
  return n_;
}

std::vector<std::size_t> Strategy::naive_partitions(std::size_t w) const {
  if (w >= n_) throw Error(Errc::IndexOutOfRange, "worker out of range");
  switch (kind_) {
    case StrategyKind::Naive:
    case StrategyKind::IgnoreS: return {w};
    case StrategyKind::Coded: return {};
    case StrategyKind::PartialCoded: return plan_->naive_assignment[w];
  }
  return {};
}

std::vector<std::size_t> Strategy::coded_partitions(std::size_t w) const {
  if (w >= n_) throw Error(Errc::IndexOutOfRange, "worker out of range");
  switch (kind_) {
    case StrategyKind::Naive:
    case StrategyKind::IgnoreS: return {};
    case StrategyKind::Coded: return code_->assignment(w);
    case StrategyKind::PartialCoded: {
      auto parts = plan_->coded.assignment(w);
      for (auto& j : parts) j += plan_->naive_partitions_total;
      return parts;
    }
  }
  return {};
}

std::string Strategy::label() const {
  switch (kind_) {
    case StrategyKind::Naive: return "naive";
    case StrategyKind::IgnoreS: return "ignore";
    case StrategyKind::Coded: return std::string(code_kind_name(code_->kind()));
    case StrategyKind::PartialCoded: return "partial-" + std::string(code_kind_name(plan_->coded.kind()));
  }
  return "unknown";
}

double Strategy::replication_overhead() const {
  switch (kind_) {
    case StrategyKind::Naive:
    case StrategyKind::IgnoreS: return 0.0;
    case StrategyKind::Coded: {
      const auto density = density_check(*code_).row_density;
      double total = 0.0;
      for (auto d : density) total += static_cast<double>(d);
      return total / static_cast<double>(code_->partitions()) - 1.0;
    }
    case StrategyKind::PartialCoded:
      return load_fraction(plan_->n, plan_->s, plan_->alpha) * static_cast<double>(plan_->n) - 1.0;
  }
  return 0.0;
}

void LatencyModel::validate() const {
  if (!(compute_time_per_partition >= 0.0) || !std::isfinite(compute_time_per_partition))
    invalid("compute_time must be a finite value >= 0");
  if (!(comm_time >= 0.0) || !std::isfinite(comm_time)) invalid("comm_time must be a finite value >= 0");
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) invalid("jitter_sigma must be >= 0");
}

void StragglerPolicy::validate(std::size_t n) const {
  if (mode == StragglerMode::FixedSet) {
    auto sorted = workers;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      invalid("straggler workers must be distinct");
    for (auto w : sorted)
      if (w >= n) invalid("straggler worker " + std::to_string(w) + " out of range");
  }
  if (mode == StragglerMode::RandomPerIteration && count > n)
    invalid("straggler count exceeds the number of workers");
  if (kind == StragglerKind::FullDelay && !(delay >= 0.0))
    invalid("straggler delay must be >= 0");
  if (kind == StragglerKind::PartialSlowdown && (!(alpha > 1.0) || !std::isfinite(alpha)))
    throw Error(Errc::InvalidAlpha, "straggler slowdown alpha must be > 1");
}

IterationOutcome run_iteration(const Strategy& strategy, const LatencyModel& latency,
                               const StragglerPolicy& policy, const Dataset& data,
                               std::span<const double> point, IterationStreams& streams,
                               DecodeCache& cache, const IterationOptions& options) {
  const std::size_t n = strategy.workers();
  const std::size_t s = strategy.stragglers();
  if (data.partitions().size() != strategy.partition_count())
    invalid("dataset has " + std::to_string(data.partitions().size()) +
            " partitions, strategy needs " + std::to_string(strategy.partition_count()));

  IterationOutcome out;
  IterationTrace& trace = out.trace;
  trace.stragglers = pick_stragglers(policy, n, streams.straggler);

  std::vector<double> jitter(n, 1.0);
  if (latency.jitter_sigma > 0.0)
    for (double& j : jitter) j = std::exp(latency.jitter_sigma * streams.latency.normal());

  // Partition gradients, each computed once; worker messages combine them.
  const std::size_t parts = data.partitions().size();
  std::vector<Vec> grads(parts);
  for (std::size_t j = 0; j < parts; ++j) grads[j] = partial_gradient(data, j, point);

  const double nominal_rows = static_cast<double>(data.rows()) / static_cast<double>(n);
  auto compute_cost = [&](const std::vector<std::size_t>& ps) {
    double rows = 0.0;
    for (auto j : ps) rows += static_cast<double>(data.partitions()[j].size());
    return latency.compute_time_per_partition * rows / nominal_rows;
  };

  const bool two_stage = strategy.kind() == StrategyKind::PartialCoded;
  for (std::size_t w = 0; w < n; ++w) {
    const bool slow = std::binary_search(trace.stragglers.begin(), trace.stragglers.end(), w);
    double factor = jitter[w];
    double delay = 0.0;
    if (slow && policy.kind == StragglerKind::PartialSlowdown) factor *= policy.alpha;
    if (slow && policy.kind == StragglerKind::FullDelay) delay = policy.delay;

    const double naive_cost = compute_cost(strategy.naive_partitions(w)) * factor;
    const double coded_cost = compute_cost(strategy.coded_partitions(w)) * factor;
    if (two_stage) {
      trace.events.push_back({delay + naive_cost + latency.comm_time, w, MessageKind::NaiveSum});
      trace.events.push_back(
          {delay + naive_cost + coded_cost + latency.comm_time, w, MessageKind::Coded});
    } else {
      const auto kind = strategy.kind() == StrategyKind::Coded ? MessageKind::Coded : MessageKind::NaiveSum;
      trace.events.push_back({delay + naive_cost + coded_cost + latency.comm_time, w, kind});
    }
  }
  std::sort(trace.events.begin(), trace.events.end());

  // Aggregator: consume messages in order until the strategy's rule is met.
  const std::size_t need_naive = two_stage || strategy.kind() == StrategyKind::Naive ? n
                                 : strategy.kind() == StrategyKind::IgnoreS        ? n - s
                                                                                   : 0;
  const std::size_t need_coded =
      strategy.kind() == StrategyKind::Coded || two_stage ? n - s : 0;
  std::vector<std::size_t> naive_from;
  std::vector<std::size_t> coded_from;
  bool done = false;
  for (const Message& m : trace.events) {
    if (!std::isfinite(m.time)) break;
    if (m.kind == MessageKind::NaiveSum) {
      if (naive_from.size() < need_naive) naive_from.push_back(m.worker);
    } else if (coded_from.size() < need_coded) {
      coded_from.push_back(m.worker);
    }
    if (naive_from.size() == need_naive && coded_from.size() == need_coded) {
      trace.duration = m.time;
      done = true;
      break;
    }
  }
  if (!done)
    throw Error(Errc::StarvedIteration,
                "only " + std::to_string(naive_from.size() + coded_from.size()) +
                    " messages ever arrive; the aggregator cannot complete the iteration");

  const std::size_t p = data.features();
  Vec gradient(p, 0.0);
  for (std::size_t w : naive_from)
    for (std::size_t j : strategy.naive_partitions(w)) add_scaled(gradient, grads[j], 1.0);

  switch (strategy.kind()) {
    case StrategyKind::Naive:
      trace.survivors = naive_from;
      trace.gradient_kind = GradientKind::Exact;
      break;
    case StrategyKind::IgnoreS:
      trace.survivors = naive_from;
      trace.gradient_kind = s == 0 ? GradientKind::Exact : GradientKind::PartialSum;
      break;
    case StrategyKind::Coded:
    case StrategyKind::PartialCoded: {
      const GradientCode& code = *strategy.code();
      const std::size_t offset = two_stage ? strategy.plan()->naive_partitions_total : 0;
      const std::vector<Vec> coded_grads(grads.begin() + static_cast<std::ptrdiff_t>(offset), grads.end());
      add_scaled(gradient, decode_coded(code, coded_from, coded_grads, cache, options.tol, trace.survivors), 1.0);
      trace.gradient_kind = GradientKind::Exact;
      break;
    }
  }
  std::sort(trace.survivors.begin(), trace.survivors.end());

  if (options.check_exactness && trace.gradient_kind == GradientKind::Exact) {
    Vec plain(p, 0.0);
    for (const Vec& g : grads) add_scaled(plain, g, 1.0);
    const double gap = relative_gap(gradient, plain);
    if (!(gap <= 1e-6))
      throw Error(Errc::SpanFailure, "decoded gradient deviates from the full gradient by " +
                                         std::to_string(gap) + " (relative)");
  }
  out.gradient = std::move(gradient);
  return out;
}

void RunConfig::validate() const {
  const auto& st = strategy;
  if (st.n == 0) invalid("n must be >= 1");
  if (st.s >= st.n) invalid("s must be < n");
  if (st.kind == StrategyKind::Coded || st.kind == StrategyKind::PartialCoded) {
    if (st.code != CodeKind::FracRep && st.code != CodeKind::CycRep)
      invalid("coded strategies use a frac or cyc code");
    if (st.s == 0) invalid("coded strategies need s >= 1");
  }
  if (st.kind == StrategyKind::PartialCoded && (!(st.alpha > 1.0) || !std::isfinite(st.alpha)))
    throw Error(Errc::InvalidAlpha, "alpha must be > 1");
  latency.validate();
  stragglers.validate(st.n);
  optimizer.validate();
  if (optimizer.iterations == 0) invalid("iterations must be >= 1");
  if (dataset.p == 0) invalid("p must be >= 1");
  if (dataset.d < 2) invalid("d must be >= 2");
  if (!(dataset.holdout_fraction > 0.0 && dataset.holdout_fraction < 1.0))
    invalid("holdout fraction must be in (0, 1)");
}

TrainHoldout make_data(const DatasetSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  SyntheticData synth = gen_synthetic(rng, spec.d, spec.p);
  return split_holdout(synth.data, rng, spec.holdout_fraction);
}

Strategy make_strategy(const StrategySpec& spec, std::uint64_t scheme_seed) {
  switch (spec.kind) {
    case StrategyKind::Naive: return Strategy::naive(spec.n);
    case StrategyKind::IgnoreS: return Strategy::ignore(spec.n, spec.s);
    case StrategyKind::Coded:
      return Strategy::coded(spec.code == CodeKind::CycRep ? build_cyc(spec.n, spec.s, scheme_seed)
                                                           : build_frac(spec.n, spec.s));
    case StrategyKind::PartialCoded:
      return Strategy::partial(plan_partial(spec.n, spec.s, spec.alpha, spec.code, scheme_seed));
  }
  invalid("unknown strategy");
}

RunResult run_training(const RunConfig& config) {
  config.validate();
  return run_training(config, make_data(config.dataset, config.seeds.data));
}

RunResult run_training(const RunConfig& config, const TrainHoldout& data) {
  config.validate();
  const Strategy strategy = make_strategy(config.strategy, config.seeds.scheme);
  const Dataset train = data.train.with_partitions(strategy.partition_count());

  RunResult result;
  result.config = config;
  result.label = strategy.label();
  result.replication_overhead = strategy.replication_overhead();

  IterationStreams streams{Rng(config.seeds.latency), Rng(config.seeds.straggler)};
  DecodeCache cache;
  IterationOptions options{.check_exactness = config.check_exactness};
  Optimizer opt(config.optimizer, Vec(train.features(), 0.0));

  double clock = 0.0;
  const std::size_t iters = config.optimizer.iterations;
  for (std::size_t it = 0; it < iters; ++it) {
    IterationOutcome step =
        run_iteration(strategy, config.latency, config.stragglers, train, opt.query_point(), streams,
                      cache, options);
    opt.step(step.gradient);
    clock += step.trace.duration;
    step.trace.iteration = it + 1;
    step.trace.clock = clock;
    step.trace.loss = loss(train, opt.model());
    const bool last = it + 1 == iters;
    if (last || (config.auc_interval > 0 && (it + 1) % config.auc_interval == 0))
      step.trace.auc = auc(scores(data.holdout, opt.model()), data.holdout.y());
    result.traces.push_back(std::move(step.trace));
  }
  result.final_model = opt.model();
  return result;
}

std::string run_csv(const RunResult& run) {
  std::ostringstream out;
  out << "iteration,sim_time_s,loss,auc,survivors,strategy\n";
  for (const IterationTrace& t : run.traces) {
    out << t.iteration << ',' << format_real(t.clock) << ',' << format_real(t.loss) << ',';
    if (t.auc) out << format_real(*t.auc);
    out << ',';
    for (std::size_t i = 0; i < t.survivors.size(); ++i) out << (i ? ";" : "") << t.survivors[i];
    out << ',' << run.label << '\n';
  }
  return out.str();
}

}  // namespace gradcode
