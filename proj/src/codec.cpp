#include "gradcode/codec.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "gradcode/combinatorics.hpp"
#include "gradcode/error.hpp"

namespace gradcode {

namespace {

// Self-check budget for build_cyc; larger codes skip the exhaustive B-Span pass
// and rely on the per-row null-space residual alone.
constexpr std::uint64_t kCyclicSelfCheckBudget = 20'000;

std::vector<std::size_t> support(std::span<const double> row) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < row.size(); ++c)
    if (row[c] != 0.0) out.push_back(c);
  return out;
}

std::vector<std::size_t> cyclic_support(std::size_t row, std::size_t s, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t <= s; ++t) out.push_back((row + t) % n);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> frac_support(std::size_t row, std::size_t s, std::size_t n) {
  const std::size_t group_size = n / (s + 1);
  const std::size_t slot = row % group_size;
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t <= s; ++t) out.push_back(slot * (s + 1) + t);
  return out;
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(Errc::InvalidArgument, msg); }

std::optional<DecodeRow> try_decode(const GradientCode& code,
                                    const std::vector<std::size_t>& idx, double tol) {
  const Mat sub = code.encoding().select_rows(idx);
  const Vec ones(code.partitions(), 1.0);
  Solution sol = solve_right(sub, ones);
  if (!(sol.residual <= tol)) return std::nullopt;
  return DecodeRow{SurvivorSet::of(idx, code.workers()), std::move(sol.x), sol.residual};
}

}  // namespace

std::string_view code_kind_name(CodeKind kind) noexcept {
  switch (kind) {
    case CodeKind::Naive: return "naive";
    case CodeKind::FracRep: return "frac";
    case CodeKind::CycRep: return "cyc";
    case CodeKind::Custom: return "custom";
  }
  return "custom";
}

std::optional<CodeKind> parse_code_kind(std::string_view name) noexcept {
  if (name == "naive") return CodeKind::Naive;
  if (name == "frac") return CodeKind::FracRep;
  if (name == "cyc") return CodeKind::CycRep;
  if (name == "custom") return CodeKind::Custom;
  return std::nullopt;
}

GradientCode GradientCode::from_matrix(CodeKind kind, std::size_t s, Mat b,
                                       std::optional<std::uint64_t> h_seed) {
  const std::size_t n = b.rows();
  const std::size_t k = b.cols();
  if (n == 0 || k == 0) invalid("encoding matrix must be non-empty");
  if (!b.all_finite()) throw Error(Errc::NonFinite, "encoding matrix has non-finite entries");
  if (s >= n) invalid("stragglers s=" + std::to_string(s) + " must be < n=" + std::to_string(n));
  if (h_seed && kind != CodeKind::CycRep) invalid("h_seed is only meaningful for cyc codes");

  auto check_rows = [&](auto expected_support) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto got = support(b.row(i));
      const auto want = expected_support(i);
      if (got != want)
        invalid("row " + std::to_string(i) + " has " + std::to_string(got.size()) +
                " non-zeros; the " + std::string(code_kind_name(kind)) + " pattern needs " +
                std::to_string(want.size()) + " at fixed positions");
    }
  };

  switch (kind) {
    case CodeKind::Naive:
      if (s != 0) invalid("naive code tolerates no stragglers (s must be 0)");
      for (std::size_t i = 0; i < n; ++i)
        if (support(b.row(i)).size() != 1)
          invalid("row " + std::to_string(i) + " of a naive code must have exactly 1 non-zero");
      break;
    case CodeKind::FracRep:
      if (k != n) invalid("frac code requires k = n");
      if (n % (s + 1) != 0)
        throw Error(Errc::DivisibilityError,
                    "frac code requires (s+1) | n; got n=" + std::to_string(n) +
                        ", s=" + std::to_string(s));
      check_rows([&](std::size_t i) { return frac_support(i, s, n); });
      break;
    case CodeKind::CycRep:
      if (k != n) invalid("cyc code requires k = n");
      if (s == 0) invalid("cyc code requires s >= 1");
      check_rows([&](std::size_t i) { return cyclic_support(i, s, n); });
      break;
    case CodeKind::Custom:
      break;
  }
  return GradientCode(kind, s, std::move(b), h_seed);
}

std::vector<std::size_t> GradientCode::assignment(std::size_t worker) const {
  if (worker >= workers())
    throw Error(Errc::IndexOutOfRange, "worker " + std::to_string(worker) + " out of range [0, " +
                                           std::to_string(workers()) + ")");
  return support(encoding_.row(worker));
}

GradientCode build_naive(std::size_t n) {
  if (n == 0) invalid("naive code needs n >= 1");
  return GradientCode::from_matrix(CodeKind::Naive, 0, Mat::identity(n));
}

GradientCode build_frac(std::size_t n, std::size_t s) {
  if (n == 0) invalid("frac code needs n >= 1");
  if (s >= n) invalid("frac code needs s < n");
  if (n % (s + 1) != 0)
    throw Error(Errc::DivisibilityError, "frac code requires (s+1) | n; " + std::to_string(s + 1) +
                                             " does not divide " + std::to_string(n));
  Mat b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c : frac_support(i, s, n)) b(i, c) = 1.0;
  return GradientCode::from_matrix(CodeKind::FracRep, s, std::move(b));
}

Mat cyclic_parity_matrix(std::size_t n, std::size_t s, std::uint64_t seed) {
  Rng rng(seed);
  Mat h = gaussian_mat(rng, s, n);
  for (std::size_t r = 0; r < s; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c + 1 < n; ++c) sum += h(r, c);
    h(r, n - 1) = -sum;
  }
  return h;
}

GradientCode build_cyc(std::size_t n, std::size_t s, std::uint64_t seed, double tol) {
  if (n < 2) invalid("cyc code needs n >= 2");
  if (s == 0 || s >= n) invalid("cyc code needs 1 <= s < n");

  std::string last_failure;
  for (int attempt = 0; attempt <= kCyclicMaxRedraws; ++attempt) {
    const std::uint64_t draw = seed + static_cast<std::uint64_t>(attempt);
    const Mat h = cyclic_parity_matrix(n, s, draw);
    Mat b(n, n);
    bool good = true;
    for (std::size_t i = 0; i < n && good; ++i) {
      std::vector<std::size_t> rest;
      for (std::size_t t = 1; t <= s; ++t) rest.push_back((i + t) % n);
      Vec rhs = h.col(i);
      for (double& v : rhs) v = -v;
      try {
        const Solution y = solve_left(h.select_cols(rest), rhs, tol);
        b(i, i) = 1.0;
        for (std::size_t t = 0; t < s; ++t) {
          if (y.x[t] == 0.0) good = false;
          b(i, rest[t]) = y.x[t];
        }
      } catch (const Error& e) {
        if (e.code() != Errc::SingularSystem) throw;
        good = false;
      }
      if (good) {
        const Vec hb = times_col(h, b.row(i));
        if (!(inf_norm(hb) <= tol)) good = false;
      }
      if (!good) last_failure = "row " + std::to_string(i) + " not realizable";
    }
    if (!good) continue;

    GradientCode code = GradientCode::from_matrix(CodeKind::CycRep, s, std::move(b), draw);
    if (binomial(n, s) <= kCyclicSelfCheckBudget && !verify_bspan(code, tol).ok) {
      last_failure = "B-Span self-check failed";
      continue;
    }
    return code;
  }
  throw Error(Errc::RetryExhausted, "cyc construction failed after " +
                                        std::to_string(kCyclicMaxRedraws) +
                                        " redraws: " + last_failure);
}

SurvivorSet SurvivorSet::of(std::vector<std::size_t> workers, std::size_t n) {
  std::sort(workers.begin(), workers.end());
  for (std::size_t i = 0; i < workers.size(); ++i) {
    if (workers[i] >= n)
      throw Error(Errc::IndexOutOfRange, "survivor " + std::to_string(workers[i]) +
                                             " out of range [0, " + std::to_string(n) + ")");
    if (i > 0 && workers[i] == workers[i - 1])
      invalid("duplicate survivor " + std::to_string(workers[i]));
  }
  return SurvivorSet(std::move(workers));
}

std::optional<DecodeRow> DecodeCache::find(const SurvivorSet& key) const {
  std::shared_lock lock(mu_);
  auto it = rows_.find(key);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

void DecodeCache::insert(const DecodeRow& row) {
  std::unique_lock lock(mu_);
  rows_.try_emplace(row.survivors, row);
}

std::size_t DecodeCache::size() const {
  std::shared_lock lock(mu_);
  return rows_.size();
}

DecodeRow decode_row(const GradientCode& code, const SurvivorSet& survivors, DecodeCache& cache,
                     double tol) {
  const std::size_t need = code.workers() - code.stragglers();
  if (survivors.size() != need)
    invalid("decode needs exactly n-s=" + std::to_string(need) + " survivors, got " +
            std::to_string(survivors.size()));
  if (survivors.indices().back() >= code.workers())
    throw Error(Errc::IndexOutOfRange, "survivor index out of range for this code");
  if (auto hit = cache.find(survivors)) return *hit;

  auto row = try_decode(code, survivors.indices(), tol);
  if (!row) {
    std::string set;
    for (std::size_t w : survivors.indices()) set += (set.empty() ? "" : ",") + std::to_string(w);
    throw Error(Errc::SpanFailure, "all-ones vector not in span of rows {" + set + "}");
  }
  cache.insert(*row);
  return *row;
}

BspanReport verify_bspan(const GradientCode& code, double tol, std::uint64_t budget) {
  const std::size_t n = code.workers();
  const std::size_t s = code.stragglers();
  const std::uint64_t total = binomial(n, s);
  if (total > budget)
    throw Error(Errc::BudgetExceeded, "C(" + std::to_string(n) + "," + std::to_string(s) +
                                          ") survivor sets exceed the enumeration budget");
  BspanReport report;
  for_each_combination(n, n - s, [&](const std::vector<std::size_t>& idx) {
    ++report.checked;
    if (!try_decode(code, idx, tol)) {
      report.ok = false;
      report.failures.push_back(SurvivorSet::of(idx, n));
    }
  });
  return report;
}

DensityReport density_check(const GradientCode& code) {
  const std::size_t n = code.workers();
  const std::size_t k = code.partitions();
  const std::size_t s = code.stragglers();
  DensityReport r;
  r.bound = (k * (s + 1) + n - 1) / n;
  for (std::size_t i = 0; i < n; ++i) r.row_density.push_back(support(code.encoding().row(i)).size());
  r.min_row_density = *std::min_element(r.row_density.begin(), r.row_density.end());
  r.meets_bound_with_equality = std::all_of(r.row_density.begin(), r.row_density.end(),
                                            [&](std::size_t d) { return d == r.bound; });
  return r;
}

MdsReport check_mds(const Mat& h, double tol, std::uint64_t budget) {
  const std::size_t s = h.rows();
  const std::size_t n = h.cols();
  if (binomial(n, s) > budget)
    throw Error(Errc::BudgetExceeded, "column subsets of H exceed the enumeration budget");
  MdsReport report;
  for_each_combination(n, s, [&](const std::vector<std::size_t>& cols) {
    ++report.checked;
    if (numerical_rank(h.select_cols(cols), tol) != s) {
      report.ok = false;
      report.failures.push_back(cols);
    }
  });
  return report;
}

}  // namespace gradcode
