#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string_view>
#include <vector>

#include "gradcode/numerics.hpp"

namespace gradcode {

// Custom covers imported encoding matrices that follow none of the built-in
// constructions; only shape, finiteness and 0 <= s < n are enforced for it.
enum class CodeKind { Naive, FracRep, CycRep, Custom };

std::string_view code_kind_name(CodeKind kind) noexcept;
std::optional<CodeKind> parse_code_kind(std::string_view name) noexcept;

// Encoding matrix B (n workers x k partitions) plus the straggler tolerance it
// was designed for. Immutable once constructed.
class GradientCode {
 public:
  // Validates the invariants for `kind` and throws InvalidArgument (or
  // DivisibilityError for a FracRep with (s+1) not dividing n) on violation.
  static GradientCode from_matrix(CodeKind kind, std::size_t stragglers, Mat encoding,
                                  std::optional<std::uint64_t> h_seed = std::nullopt);

  std::size_t workers() const noexcept { return encoding_.rows(); }
  std::size_t partitions() const noexcept { return encoding_.cols(); }
  std::size_t stragglers() const noexcept { return stragglers_; }
  CodeKind kind() const noexcept { return kind_; }
  const Mat& encoding() const noexcept { return encoding_; }
  std::optional<std::uint64_t> h_seed() const noexcept { return h_seed_; }

  // supp(b_worker), ascending.
  std::vector<std::size_t> assignment(std::size_t worker) const;

  friend bool operator==(const GradientCode&, const GradientCode&) = default;

 private:
  GradientCode(CodeKind kind, std::size_t s, Mat b, std::optional<std::uint64_t> seed)
      : kind_(kind), stragglers_(s), encoding_(std::move(b)), h_seed_(seed) {}

  CodeKind kind_;
  std::size_t stragglers_;
  Mat encoding_;
  std::optional<std::uint64_t> h_seed_;
};

GradientCode build_naive(std::size_t n);
GradientCode build_frac(std::size_t n, std::size_t s);

inline constexpr int kCyclicMaxRedraws = 5;

// Cyclic repetition code. H is drawn from Rng(seed); if a row cannot be solved
// or the finished code fails its B-Span self-check, H is redrawn from seed+1,
// up to kCyclicMaxRedraws times. The seed that succeeded is kept as h_seed.
GradientCode build_cyc(std::size_t n, std::size_t s, std::uint64_t seed,
                       double tol = kDefaultTol);

// The s x n matrix H with H*1 = 0 that the cyclic construction draws from `seed`.
Mat cyclic_parity_matrix(std::size_t n, std::size_t s, std::uint64_t seed);

// Sorted set of distinct worker indices.
class SurvivorSet {
 public:
  // Sorts and validates; throws IndexOutOfRange or InvalidArgument on
  // duplicates.
  static SurvivorSet of(std::vector<std::size_t> workers, std::size_t n);

  const std::vector<std::size_t>& indices() const noexcept { return idx_; }
  std::size_t size() const noexcept { return idx_.size(); }

  friend auto operator<=>(const SurvivorSet&, const SurvivorSet&) = default;

 private:
  explicit SurvivorSet(std::vector<std::size_t> idx) : idx_(std::move(idx)) {}
  std::vector<std::size_t> idx_;
};

struct DecodeRow {
  SurvivorSet survivors;
  Vec coeffs;  // aligned with survivors.indices()
  double residual = 0.0;
};

// Decoding rows keyed by survivor set. Lookups are shared, inserts exclusive.
class DecodeCache {
 public:
  std::optional<DecodeRow> find(const SurvivorSet& key) const;
  void insert(const DecodeRow& row);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<SurvivorSet, DecodeRow> rows_;
};

// Coefficients x with x * B(I,:) = 1 for |I| = n - s. Throws SpanFailure when
// the residual exceeds tol.
DecodeRow decode_row(const GradientCode& code, const SurvivorSet& survivors, DecodeCache& cache,
                     double tol = kDefaultTol);

inline constexpr std::uint64_t kDefaultEnumerationBudget = 1'000'000;

struct BspanReport {
  bool ok = true;
  std::uint64_t checked = 0;
  std::vector<SurvivorSet> failures;
};

// Checks every survivor set of size n - s. Throws BudgetExceeded if C(n, s)
// is larger than `budget`.
BspanReport verify_bspan(const GradientCode& code, double tol = kDefaultTol,
                         std::uint64_t budget = kDefaultEnumerationBudget);

struct DensityReport {
  std::vector<std::size_t> row_density;
  std::size_t min_row_density = 0;
  std::size_t bound = 0;  // ceil(k (s+1) / n)
  bool meets_bound_with_equality = false;
};

DensityReport density_check(const GradientCode& code);

struct MdsReport {
  bool ok = true;
  std::uint64_t checked = 0;
  std::vector<std::vector<std::size_t>> failures;  // column sets of H with rank < s
};

// Every s-column submatrix of H has rank s.
MdsReport check_mds(const Mat& h, double tol = kDefaultTol,
                    std::uint64_t budget = kDefaultEnumerationBudget);

}  // namespace gradcode
