#include <doctest.h>

#include <limits>
#include <string>

#include "gradcode/compare.hpp"
#include "gradcode/error.hpp"
#include "gradcode/sim_config.hpp"

using namespace gradcode;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::IoError;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

RunConfig tiny(StrategyKind kind, std::uint64_t seed = 3) {
  RunConfig c;
  c.strategy = {kind, CodeKind::CycRep, 4, 1, 2.0};
  c.dataset = {400, 5, 0.2};
  c.optimizer.iterations = 12;
  c.optimizer.eta = 1e-3;
  c.stragglers.mode = StragglerMode::RandomPerIteration;
  c.stragglers.count = 1;
  c.stragglers.delay = 2.0;
  c.seeds = SeedBundle::derive(seed);
  return c;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("seed_all derives sub-seeds and explicit ones override") {
    const RunConfig a = run_config_from_json(R"({"strategy": "cyc", "n": 6, "s": 2, "seed_all": 10})");
    CHECK(a.seeds == SeedBundle{10, 11, 12, 13});
    CHECK(a.strategy.kind == StrategyKind::Coded);
    CHECK(a.strategy.code == CodeKind::CycRep);
    CHECK(a.stragglers.count == 2);  // defaults to s
    const RunConfig b =
        run_config_from_json(R"({"strategy": "naive", "seed_all": 10, "seed_latency": 99})");
    CHECK(b.seeds == SeedBundle{10, 11, 99, 13});
  }

  TEST_CASE("missing seeds are rejected") {
    CHECK(code_of([] { run_config_from_json(R"({"strategy": "naive"})"); }) == Errc::InvalidArgument);
    CHECK(code_of([] {
            run_config_from_json(R"({"strategy": "naive", "seed_data": 1, "seed_scheme": 2})");
          }) == Errc::InvalidArgument);
    CHECK_NOTHROW(run_config_from_json(
        R"({"strategy": "naive", "seed_data": 1, "seed_scheme": 2, "seed_latency": 3, "seed_straggler": 4})"));
  }

  TEST_CASE("malformed documents give parse errors") {
    CHECK(code_of([] { run_config_from_json("{"); }) == Errc::ParseError);
    CHECK(code_of([] { run_config_from_json("[]"); }) == Errc::ParseError);
    CHECK(code_of([] { run_config_from_json(R"({"strategy": "naive", "seed_all": 1, "colour": 2})"); }) ==
          Errc::ParseError);
    CHECK(code_of([] { run_config_from_json(R"({"strategy": "mds", "seed_all": 1})"); }) == Errc::ParseError);
    CHECK(code_of([] { run_config_from_json(R"({"strategy": "naive", "n": -2, "seed_all": 1})"); }) ==
          Errc::ParseError);
    CHECK(code_of([] { run_config_from_json(R"({"strategy": "naive", "optimizer": "adam", "seed_all": 1})"); }) ==
          Errc::ParseError);
  }

  TEST_CASE("semantic validation") {
    CHECK(code_of([] { run_config_from_json(R"({"strategy": "cyc", "n": 4, "s": 0, "seed_all": 1})"); }) ==
          Errc::InvalidArgument);
    CHECK(code_of([] {
            run_config_from_json(R"({"strategy": "partial-cyc", "n": 4, "s": 1, "alpha": 0.9, "seed_all": 1})");
          }) == Errc::InvalidAlpha);
    CHECK(code_of([] {
            run_config_from_json(
                R"({"strategy": "naive", "n": 4, "straggler_mode": "fixed", "straggler_workers": [4], "seed_all": 1})");
          }) == Errc::InvalidArgument);
  }

  TEST_CASE("ignore defaults to decaying gradient descent") {
    CHECK(run_config_from_json(R"({"strategy": "ignore", "seed_all": 1})").optimizer.method ==
          Method::DecayingGD);
    CHECK(run_config_from_json(R"({"strategy": "frac", "s": 2, "seed_all": 1})").optimizer.method ==
          Method::NAG);
  }

  TEST_CASE("normalized form round-trips, infinite delays included") {
    RunConfig c = tiny(StrategyKind::PartialCoded);
    c.stragglers.delay = std::numeric_limits<double>::infinity();
    c.stragglers.kind = StragglerKind::PartialSlowdown;
    c.stragglers.alpha = 3.0;
    const std::string text = run_config_to_json(c);
    CHECK(contains(text, "\"straggler_delay\": \"inf\""));
    const RunConfig back = run_config_from_json(text);
    CHECK(run_config_to_json(back) == text);
    CHECK(back.stragglers.delay == std::numeric_limits<double>::infinity());
  }

  TEST_CASE("bundles merge base and members") {
    const auto runs = compare_bundle_from_json(
        R"({"base": {"n": 6, "s": 2, "seed_all": 4}, "runs": [{"strategy": "frac"}, {"strategy": "naive", "n": 3}]})");
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].strategy.n == 6);
    CHECK(runs[1].strategy.n == 3);
    CHECK(runs[1].seeds == SeedBundle::derive(4));
    CHECK(code_of([] { compare_bundle_from_json(R"({"runs": []})"); }) == Errc::ParseError);
    CHECK(code_of([] { compare_bundle_from_json(R"({"runs": [{}], "extra": 1})"); }) == Errc::ParseError);
  }
}

TEST_SUITE("compare") {
  TEST_CASE("summary of runs sharing a dataset") {
    std::vector<RunResult> runs{run_training(tiny(StrategyKind::Naive)),
                                run_training(tiny(StrategyKind::Coded)),
                                run_training(tiny(StrategyKind::IgnoreS))};
    const Comparison cmp = compare_runs(runs);
    REQUIRE(cmp.summary.size() == 3);
    for (const RunSummary& s : cmp.summary) {
      CHECK(s.iterations == 12);
      REQUIRE(s.iterations_to_threshold.has_value());  // automatic threshold is reachable
      CHECK(s.final_auc.has_value());
    }
    CHECK(cmp.summary[0].label == "naive");
    CHECK(cmp.summary[1].label == "cyc");
    CHECK(cmp.summary[0].final_loss == doctest::Approx(cmp.summary[1].final_loss).epsilon(1e-9));
    CHECK(cmp.summary[1].total_time < cmp.summary[0].total_time);
    CHECK(cmp.summary[1].replication_overhead == doctest::Approx(1.0));
    CHECK(cmp.summary[0].mean_iteration_time == doctest::Approx(cmp.summary[0].total_time / 12));

    const std::string summary = summary_csv(cmp);
    CHECK(summary.rfind("label,iterations,total_time_s", 0) == 0);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 4);
    const std::string iters = iteration_csv(cmp);
    CHECK(iters.rfind("iteration,naive_time_s,naive_loss,naive_auc,cyc_time_s", 0) == 0);
    CHECK(std::count(iters.begin(), iters.end(), '\n') == 13);
    const std::string timeline = timeline_csv(cmp);
    CHECK(std::count(timeline.begin(), timeline.end(), '\n') == 51);
  }

  TEST_CASE("timeline reports the latest value at each time") {
    const std::vector<RunResult> runs{run_training(tiny(StrategyKind::Naive))};
    const Comparison cmp = compare_runs(runs, std::nullopt, 5);
    REQUIRE(cmp.timeline.size() == 5);
    CHECK_FALSE(cmp.timeline.front().loss[0].has_value());
    CHECK(cmp.timeline.back().time == doctest::Approx(runs[0].total_time()));
    CHECK(*cmp.timeline.back().loss[0] == runs[0].traces.back().loss);
  }

  TEST_CASE("explicit thresholds and duplicate labels") {
    const std::vector<RunResult> runs{run_training(tiny(StrategyKind::Naive)),
                                      run_training(tiny(StrategyKind::Naive))};
    const Comparison cmp = compare_runs(runs, -1.0);
    CHECK_FALSE(cmp.summary[0].iterations_to_threshold.has_value());
    CHECK(contains(summary_csv(cmp), "\nnaive#2,"));
  }

  TEST_CASE("identical configs give identical rows") {
    const std::vector<RunResult> runs{run_training(tiny(StrategyKind::Coded)),
                                      run_training(tiny(StrategyKind::Coded))};
    const std::string csv = iteration_csv(compare_runs(runs));
    std::size_t line_start = csv.find('\n') + 1;
    while (line_start < csv.size()) {
      const std::size_t end = csv.find('\n', line_start);
      const std::string line = csv.substr(line_start, end - line_start);
      const std::string cells = line.substr(line.find(',') + 1);
      const std::size_t third = [&] {
        std::size_t at = 0;
        for (int i = 0; i < 3; ++i) at = cells.find(',', at) + 1;
        return at;
      }();
      CHECK(cells.substr(0, third - 1) == cells.substr(third));
      line_start = end + 1;
    }
  }

  TEST_CASE("coded NAG beats ignore-s GD to the slower run's final loss") {
    // Desk-scale set; threshold taken post-hoc from the slower run.
    RunConfig c;
    c.strategy = {StrategyKind::Coded, CodeKind::FracRep, 12, 2, 2.0};
    c.stragglers.mode = StragglerMode::RandomPerIteration;
    c.stragglers.count = 2;
    c.stragglers.delay = 5.0;
    c.seeds = SeedBundle::derive(1);
    RunConfig g = c;
    g.strategy.kind = StrategyKind::IgnoreS;
    g.optimizer.method = Method::DecayingGD;
    const std::vector<RunResult> runs{run_training(c), run_training(g)};
    const Comparison cmp = compare_runs(runs, runs[1].traces.back().loss);
    REQUIRE(cmp.summary[0].iterations_to_threshold.has_value());
    REQUIRE(cmp.summary[1].iterations_to_threshold.has_value());
    CHECK(*cmp.summary[0].iterations_to_threshold < *cmp.summary[1].iterations_to_threshold);
  }

  TEST_CASE("runs on different data cannot be compared") {
    const std::vector<RunResult> runs{run_training(tiny(StrategyKind::Naive, 3)),
                                      run_training(tiny(StrategyKind::Naive, 4))};
    CHECK(code_of([&] { compare_runs(runs); }) == Errc::MismatchedConfigs);
    CHECK(code_of([] { compare_runs(std::span<const RunResult>{}); }) == Errc::InvalidArgument);
  }
}
