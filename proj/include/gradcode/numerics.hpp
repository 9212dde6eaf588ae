#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gradcode {

using Vec = std::vector<double>;

inline constexpr double kDefaultTol = 1e-8;

// Dense row-major real matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Mat identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& entries() const noexcept { return data_; }

  // Sub-matrices by index list.
  Mat select_rows(std::span<const std::size_t> idx) const;
  Mat select_cols(std::span<const std::size_t> idx) const;
  Vec col(std::size_t c) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Solution {
  Vec x;
  double residual = 0.0;  // infinity norm of the equation residual
};

// Least-squares (minimum-norm) row vector x with x*M ~= target.
// The caller decides whether `residual` is acceptable.
Solution solve_right(const Mat& m, std::span<const double> target);

// Least-squares column vector y with M*y ~= target. Throws SingularSystem when
// M is square and the residual exceeds tol.
Solution solve_left(const Mat& m, std::span<const double> target, double tol = kDefaultTol);

// Number of rows of M that survive Gram-Schmidt with a relative residual
// above tol. Equals the row rank for reasonably conditioned inputs.
std::size_t numerical_rank(const Mat& m, double tol = kDefaultTol);

double inf_norm(std::span<const double> v) noexcept;

// x*M for row vector x.
Vec row_times(std::span<const double> x, const Mat& m);
// M*y for column vector y.
Vec times_col(const Mat& m, std::span<const double> y);

// Seeded generator: std::mt19937_64 with a Box-Muller normal transform.
// Both halves are specified exactly, so a seed reproduces the same stream on
// every conforming toolchain (std::normal_distribution would not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  // Uniform integer in [0, bound), rejection sampled.
  std::size_t below(std::size_t bound);

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Mat gaussian_mat(Rng& rng, std::size_t rows, std::size_t cols);

}  // namespace gradcode
