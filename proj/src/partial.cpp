#include "gradcode/partial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradcode/error.hpp"

namespace gradcode {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha))
    throw Error(Errc::InvalidAlpha, "alpha must be a finite value > 1, got " + std::to_string(alpha));
}

std::size_t naive_count(std::size_t s, double alpha) {
  const double q = static_cast<double>(s + 1) / (alpha - 1.0);
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= 1e-9 * std::max(1.0, q)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(q));
}

}  // namespace

TwoStagePlan plan_partial(std::size_t n, std::size_t s, double alpha, CodeKind kind,
                          std::uint64_t seed) {
  check_alpha(alpha);
  if (n < 2) throw Error(Errc::InvalidArgument, "partial plan needs n >= 2");
  if (s == 0 || s >= n) throw Error(Errc::InvalidArgument, "partial plan needs 1 <= s < n");

  GradientCode coded = [&] {
    switch (kind) {
      case CodeKind::FracRep: return build_frac(n, s);
      case CodeKind::CycRep: return build_cyc(n, s, seed);
      default: throw Error(Errc::InvalidArgument, "partial plan needs a frac or cyc code");
    }
  }();

  TwoStagePlan plan{.n = n,
                    .s = s,
                    .alpha = alpha,
                    .naive_per_worker = naive_count(s, alpha),
                    .naive_partitions_total = 0,
                    .coded_partitions_total = n,
                    .coded = std::move(coded),
                    .naive_assignment = {}};
  plan.naive_partitions_total = n * plan.naive_per_worker;
  plan.naive_assignment.resize(n);
  for (std::size_t w = 0; w < n; ++w)
    for (std::size_t j = 0; j < plan.naive_per_worker; ++j)
      plan.naive_assignment[w].push_back(w * plan.naive_per_worker + j);
  return plan;
}

double load_fraction(std::size_t n, std::size_t s, double alpha) {
  check_alpha(alpha);
  if (n == 0 || s >= n) throw Error(Errc::InvalidArgument, "load_fraction needs 0 <= s < n");
  const double sp1 = static_cast<double>(s + 1);
  return sp1 * alpha / (static_cast<double>(n) * (static_cast<double>(s) + alpha));
}

}  // namespace gradcode
