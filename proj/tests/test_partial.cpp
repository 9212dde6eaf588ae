#include <doctest.h>

#include <set>

#include "gradcode/error.hpp"
#include "gradcode/partial.hpp"

using namespace gradcode;

TEST_SUITE("partial") {
  TEST_CASE("three workers, one straggler, alpha = 2") {
    const TwoStagePlan p = plan_partial(3, 1, 2.0, CodeKind::CycRep, 1);
    CHECK(p.naive_per_worker == 2);
    CHECK(p.total_partitions() == 9);
    CHECK(p.worker_fraction() == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
    CHECK(load_fraction(3, 1, 2.0) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
    CHECK(straggler_naive_time(p) == non_straggler_total_time(p));
  }

  TEST_CASE("twelve workers, alpha = 1.2 replicates an eighth extra") {
    const TwoStagePlan p = plan_partial(12, 2, 1.2, CodeKind::FracRep);
    CHECK(p.naive_per_worker == 15);
    CHECK(p.total_partitions() == 192);
    CHECK(p.worker_fraction() == doctest::Approx(0.09375).epsilon(1e-15));
    CHECK(load_fraction(12, 2, 1.2) * 12.0 - 1.0 == doctest::Approx(0.125).epsilon(1e-12));
  }

  TEST_CASE("timing consistency across integral (s+1)/(alpha-1)") {
    for (std::size_t s = 1; s <= 4; ++s)
      for (std::size_t m = 1; m <= 8; ++m) {
        const double alpha = 1.0 + static_cast<double>(s + 1) / static_cast<double>(m);
        const std::size_t n = 2 * (s + 1);
        const TwoStagePlan p = plan_partial(n, s, alpha, CodeKind::FracRep);
        CAPTURE(s);
        CAPTURE(m);
        CHECK(p.naive_per_worker == m);
        CHECK(straggler_naive_time(p) == doctest::Approx(non_straggler_total_time(p)).epsilon(1e-14));
        CHECK(p.worker_fraction() == doctest::Approx(load_fraction(n, s, alpha)).epsilon(1e-12));
      }
  }

  TEST_CASE("non-integral ratios round the naive count up") {
    const TwoStagePlan p = plan_partial(4, 1, 1.7, CodeKind::FracRep);
    CHECK(p.naive_per_worker == 3);  // ceil(2 / 0.7)
    CHECK(straggler_naive_time(p) > non_straggler_total_time(p) - 1e-12);
  }

  TEST_CASE("naive partitions are disjoint, contiguous and precede coded ones") {
    const TwoStagePlan p = plan_partial(6, 2, 1.5, CodeKind::CycRep, 4);
    std::set<std::size_t> seen;
    for (std::size_t w = 0; w < p.n; ++w) {
      REQUIRE(p.naive_assignment[w].size() == p.naive_per_worker);
      for (std::size_t j = 0; j < p.naive_per_worker; ++j) {
        CHECK(p.naive_assignment[w][j] == w * p.naive_per_worker + j);
        CHECK(seen.insert(p.naive_assignment[w][j]).second);
      }
    }
    CHECK(seen.size() == p.naive_partitions_total);
    CHECK(*seen.rbegin() < p.naive_partitions_total);
    CHECK(p.coded.workers() == 6);
    CHECK(p.coded.partitions() == p.coded_partitions_total);
  }

  TEST_CASE("invalid inputs") {
    auto code_of = [](auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::IoError;
    };
    CHECK(code_of([] { plan_partial(3, 1, 1.0, CodeKind::CycRep); }) == Errc::InvalidAlpha);
    CHECK(code_of([] { plan_partial(3, 1, 0.5, CodeKind::CycRep); }) == Errc::InvalidAlpha);
    CHECK(code_of([] { load_fraction(3, 1, std::nan("")); }) == Errc::InvalidAlpha);
    CHECK(code_of([] { plan_partial(3, 0, 2.0, CodeKind::CycRep); }) == Errc::InvalidArgument);
    CHECK(code_of([] { plan_partial(4, 1, 2.0, CodeKind::Naive); }) == Errc::InvalidArgument);
    CHECK(code_of([] { plan_partial(3, 1, 2.0, CodeKind::FracRep); }) == Errc::DivisibilityError);
  }
}
