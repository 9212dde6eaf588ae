#include <doctest.h>

#include <cmath>
#include <limits>

#include "gradcode/combinatorics.hpp"
#include "gradcode/error.hpp"
#include "gradcode/sim.hpp"

using namespace gradcode;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Dataset data_for(const Strategy& st, std::size_t d = 600, std::size_t p = 5, std::uint64_t seed = 1) {
  Rng rng(seed);
  return gen_synthetic(rng, d, p).data.with_partitions(st.partition_count());
}

Vec random_point(std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(p);
  for (double& x : v) x = 0.1 * rng.normal();
  return v;
}

double max_rel(const Vec& a, const Vec& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

IterationOutcome one_round(const Strategy& st, const Dataset& data, const StragglerPolicy& policy,
                           const LatencyModel& lat = {}, std::uint64_t seed = 3) {
  IterationStreams streams{Rng(seed), Rng(seed + 1)};
  DecodeCache cache;
  return run_iteration(st, lat, policy, data, random_point(data.features(), 9), streams, cache);
}

StragglerPolicy fixed(std::vector<std::size_t> workers, double delay) {
  StragglerPolicy p;
  p.mode = StragglerMode::FixedSet;
  p.workers = std::move(workers);
  p.delay = delay;
  return p;
}

RunConfig small_run(StrategyKind kind, CodeKind code = CodeKind::FracRep) {
  RunConfig c;
  c.strategy = {kind, code, 6, 2, 2.0};
  c.dataset = {1200, 8, 0.2};
  c.optimizer.iterations = 15;
  c.optimizer.eta = 3e-5 * 10000.0 / 960.0;
  c.latency.jitter_sigma = kHeavyTailJitterSigma;
  c.stragglers.mode = StragglerMode::RandomPerIteration;
  c.stragglers.count = 2;
  c.stragglers.delay = 3.0;
  c.seeds = SeedBundle::derive(17);
  return c;
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("three-worker scheme survives a worker that never reports") {
    const GradientCode code = GradientCode::from_matrix(
        CodeKind::CycRep, 1, Mat(3, 3, std::vector<double>{0.5, 1, 0, 0, 1, -1, 0.5, 0, 1}));
    const Strategy st = Strategy::coded(code);
    const Dataset data = data_for(st);
    const IterationOutcome out = one_round(st, data, fixed({2}, kInf));
    CHECK(out.trace.survivors == std::vector<std::size_t>{0, 1});
    CHECK(max_rel(out.gradient, full_gradient(data, random_point(5, 9))) < 1e-10);
    CHECK(out.trace.duration == doctest::Approx(2.0 * 1.0 + 0.1));  // two partitions of d/3 rows
    CHECK_FALSE(std::isfinite(out.trace.events.back().time));
  }

  TEST_CASE("naive waits for everybody under uniform latency") {
    const Strategy st = Strategy::naive(4);
    const Dataset data = data_for(st);
    const IterationOutcome out = one_round(st, data, StragglerPolicy{});
    CHECK(out.trace.duration == doctest::Approx(1.1));
    CHECK(out.trace.survivors.size() == 4);
    CHECK(out.trace.gradient_kind == GradientKind::Exact);
    CHECK(max_rel(out.gradient, full_gradient(data, random_point(5, 9))) < 1e-12);

    const IterationOutcome late = one_round(st, data, fixed({1}, 5.0));
    CHECK(late.trace.duration == doctest::Approx(6.1));
  }

  TEST_CASE("ignore-s drops the slow worker's partition") {
    const Strategy st = Strategy::ignore(4, 1);
    const Dataset data = data_for(st);
    const Vec point = random_point(5, 9);
    const IterationOutcome out = one_round(st, data, fixed({2}, 5.0));
    CHECK(out.trace.survivors == std::vector<std::size_t>{0, 1, 3});
    CHECK(out.trace.gradient_kind == GradientKind::PartialSum);
    CHECK(out.trace.duration == doctest::Approx(1.1));
    Vec want(5, 0.0);
    for (std::size_t j : {0u, 1u, 3u}) {
      const Vec g = partial_gradient(data, j, point);
      for (std::size_t i = 0; i < 5; ++i) want[i] += g[i];
    }
    CHECK(max_rel(out.gradient, want) < 1e-12);
  }

  TEST_CASE("iteration time equals the completing message in the event log") {
    // Oracle: recompute each worker's arrival from the model, then take the
    // (n - s)-th coded arrival.
    const Strategy st = Strategy::coded(build_cyc(7, 2, 5));
    const Dataset data = data_for(st, 700);
    LatencyModel lat;
    lat.compute_time_per_partition = 0.7;
    lat.comm_time = 0.05;
    lat.jitter_sigma = 0.5;
    StragglerPolicy pol;
    pol.mode = StragglerMode::RandomPerIteration;
    pol.count = 2;
    pol.delay = 2.0;
    IterationStreams streams{Rng(41), Rng(42)};
    IterationStreams mirror{Rng(41), Rng(42)};
    DecodeCache cache;
    for (int round = 0; round < 10; ++round) {
      const IterationOutcome out =
          run_iteration(st, lat, pol, data, random_point(5, 1), streams, cache);
      std::vector<double> jitter(7);
      for (double& j : jitter) j = std::exp(0.5 * mirror.latency.normal());
      // Replay the straggler draw with the same partial Fisher-Yates.
      std::vector<std::size_t> pool{0, 1, 2, 3, 4, 5, 6};
      for (std::size_t i = 0; i < 2; ++i) std::swap(pool[i], pool[i + mirror.straggler.below(7 - i)]);
      std::vector<double> arrival(7);
      for (std::size_t w = 0; w < 7; ++w) {
        const bool slow = w == pool[0] || w == pool[1];
        arrival[w] = (slow ? 2.0 : 0.0) + 3 * 0.7 * jitter[w] + 0.05;
      }
      std::vector<double> sorted = arrival;
      std::sort(sorted.begin(), sorted.end());
      CHECK(out.trace.duration == doctest::Approx(sorted[4]).epsilon(1e-12));
      for (const Message& m : out.trace.events) CHECK(m.time == doctest::Approx(arrival[m.worker]));
      CHECK(std::is_sorted(out.trace.events.begin(), out.trace.events.end()));
    }
  }

  TEST_CASE("coded strategies are exact for every straggler set") {
    for (const GradientCode& code : {build_frac(6, 2), build_cyc(6, 2, 8), build_cyc(5, 1, 2)}) {
      const Strategy st = Strategy::coded(code);
      const Dataset data = data_for(st);
      const Vec full = full_gradient(data, random_point(5, 9));
      for_each_combination(code.workers(), code.stragglers(), [&](const std::vector<std::size_t>& slow) {
        const IterationOutcome out = one_round(st, data, fixed(slow, kInf));
        REQUIRE(max_rel(out.gradient, full) < 1e-6);
        for (std::size_t w : slow)
          CHECK_FALSE(std::binary_search(out.trace.survivors.begin(), out.trace.survivors.end(), w));
      });
    }
  }

  TEST_CASE("too many dead workers starve the aggregator") {
    const Strategy st = Strategy::coded(build_frac(4, 1));
    const Dataset data = data_for(st);
    try {
      one_round(st, data, fixed({0, 1}, kInf));
      FAIL("expected StarvedIteration");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::StarvedIteration);
    }
  }

  TEST_CASE("partial coding is exact and waits for every naive sum") {
    const Strategy st = Strategy::partial(plan_partial(3, 1, 2.0, CodeKind::CycRep, 1));
    const Dataset data = data_for(st, 900);
    const Vec full = full_gradient(data, random_point(5, 9));
    StragglerPolicy slow;
    slow.mode = StragglerMode::FixedSet;
    slow.workers = {1};
    slow.kind = StragglerKind::PartialSlowdown;
    slow.alpha = 2.0;
    const IterationOutcome out = one_round(st, data, slow);
    CHECK(max_rel(out.gradient, full) < 1e-8);
    CHECK(out.trace.gradient_kind == GradientKind::Exact);
    // Each worker holds 4/9 of the data = 4/3 units; naive share 2/9 = 2/3 unit.
    // Healthy workers finish coded work at 4/3 + 0.1; the straggler's naive
    // sum lands at 2 * 2/3 + 0.1, the same instant.
    CHECK(out.trace.duration == doctest::Approx(4.0 / 3.0 + 0.1));
    CHECK(std::count_if(out.trace.events.begin(), out.trace.events.end(),
                        [](const Message& m) { return m.kind == MessageKind::NaiveSum; }) == 3);
    CHECK(st.replication_overhead() == doctest::Approx(1.0 / 3.0));
    CHECK(Strategy::partial(plan_partial(12, 2, 1.2, CodeKind::FracRep)).replication_overhead() ==
          doctest::Approx(0.125));
  }

  TEST_CASE("exact strategies follow the same trajectory whatever the stragglers") {
    RunConfig a = small_run(StrategyKind::Coded, CodeKind::CycRep);
    RunConfig b = a;
    b.seeds.straggler = 999;
    b.seeds.latency = 998;
    RunConfig c = a;
    c.strategy.kind = StrategyKind::Naive;
    const RunResult ra = run_training(a), rb = run_training(b), rc = run_training(c);
    for (std::size_t i = 0; i < ra.traces.size(); ++i) {
      CHECK(ra.traces[i].loss == doctest::Approx(rb.traces[i].loss).epsilon(1e-9));
      CHECK(ra.traces[i].loss == doctest::Approx(rc.traces[i].loss).epsilon(1e-9));
    }
    CHECK(ra.total_time() != rb.total_time());
  }

  TEST_CASE("runs are reproducible from their config") {
    for (StrategyKind k : {StrategyKind::IgnoreS, StrategyKind::Coded, StrategyKind::PartialCoded}) {
      const RunConfig c = small_run(k);
      const RunResult r1 = run_training(c), r2 = run_training(c);
      CHECK(run_csv(r1) == run_csv(r2));
      CHECK(r1.final_model == r2.final_model);
    }
  }

  TEST_CASE("exactness check passes for coded runs") {
    RunConfig c = small_run(StrategyKind::Coded, CodeKind::CycRep);
    c.check_exactness = true;
    CHECK_NOTHROW(run_training(c));
    c.strategy.kind = StrategyKind::PartialCoded;
    CHECK_NOTHROW(run_training(c));
  }

  TEST_CASE("csv output and auc cadence") {
    RunConfig c = small_run(StrategyKind::Naive);
    c.auc_interval = 4;
    const RunResult r = run_training(c);
    const std::string csv = run_csv(r);
    CHECK(csv.rfind("iteration,sim_time_s,loss,auc,survivors,strategy\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
    for (const IterationTrace& t : r.traces)
      CHECK(t.auc.has_value() == (t.iteration % 4 == 0 || t.iteration == 15));
    CHECK(r.traces.back().clock == doctest::Approx(r.total_time()));
  }

  TEST_CASE("strategy construction and config validation") {
    const GradientCode bad = GradientCode::from_matrix(
        CodeKind::Custom, 1, Mat(4, 4, std::vector<double>{1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 1, 0, 0, 1}));
    try {
      Strategy::coded(bad);
      FAIL("expected SpanFailure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SpanFailure);
    }
    CHECK_THROWS_AS(Strategy::ignore(3, 3), Error);
    RunConfig c = small_run(StrategyKind::Coded);
    c.strategy.s = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small_run(StrategyKind::PartialCoded);
    c.strategy.alpha = 1.0;
    try {
      c.validate();
      FAIL("expected InvalidAlpha");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidAlpha);
    }
  }
}
