#include "gradcode/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "gradcode/error.hpp"

namespace gradcode {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> view(const Mat& m) {
  return {m.entries().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

void require_finite(const Mat& m, std::span<const double> target) {
  if (!m.all_finite()) throw Error(Errc::NonFinite, "matrix has non-finite entries");
  for (double v : target)
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "target has non-finite entries");
}

Vec to_vec(const Eigen::VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols)
    throw Error(Errc::DimensionMismatch,
                "matrix entries: expected " + std::to_string(rows * cols) + ", got " +
                    std::to_string(data_.size()));
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::select_rows(std::span<const std::size_t> idx) const {
  Mat out(idx.size(), cols_);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows_) throw Error(Errc::IndexOutOfRange, "row index out of range");
    auto src = row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Mat Mat::select_cols(std::span<const std::size_t> idx) const {
  Mat out(rows_, idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) {
    if (idx[c] >= cols_) throw Error(Errc::IndexOutOfRange, "column index out of range");
    for (std::size_t r = 0; r < rows_; ++r) out(r, c) = (*this)(r, idx[c]);
  }
  return out;
}

Vec Mat::col(std::size_t c) const {
  Vec out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

bool Mat::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double inf_norm(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Vec row_times(std::span<const double> x, const Mat& m) {
  if (x.size() != m.rows()) throw Error(Errc::DimensionMismatch, "row_times: length mismatch");
  Vec out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += x[r] * row[c];
  }
  return out;
}

Vec times_col(const Mat& m, std::span<const double> y) {
  if (y.size() != m.cols()) throw Error(Errc::DimensionMismatch, "times_col: length mismatch");
  Vec out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[r] += row[c] * y[c];
  }
  return out;
}

Solution solve_right(const Mat& m, std::span<const double> target) {
  if (m.rows() == 0) throw Error(Errc::DimensionMismatch, "solve_right: matrix has no rows");
  if (target.size() != m.cols())
    throw Error(Errc::DimensionMismatch, "solve_right: target length " +
                                             std::to_string(target.size()) + " != cols " +
                                             std::to_string(m.cols()));
  require_finite(m, target);

  // x*M = t  <=>  M^T x^T = t^T
  const Eigen::MatrixXd mt = view(m).transpose();
  Eigen::Map<const Eigen::VectorXd> t(target.data(), static_cast<Eigen::Index>(target.size()));
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(mt);
  Eigen::VectorXd x = cod.solve(t);

  Solution sol{to_vec(x), 0.0};
  Vec back = row_times(sol.x, m);
  for (std::size_t c = 0; c < back.size(); ++c)
    sol.residual = std::max(sol.residual, std::abs(back[c] - target[c]));
  return sol;
}

Solution solve_left(const Mat& m, std::span<const double> target, double tol) {
  if (m.rows() == 0 || target.size() != m.rows())
    throw Error(Errc::DimensionMismatch, "solve_left: target length must equal rows");
  if (m.rows() < m.cols())
    throw Error(Errc::DimensionMismatch, "solve_left: system is underdetermined");
  require_finite(m, target);

  Eigen::Map<const Eigen::VectorXd> t(target.data(), static_cast<Eigen::Index>(target.size()));
  Eigen::VectorXd y;
  if (m.rows() == m.cols()) {
    y = view(m).colPivHouseholderQr().solve(t);
  } else {
    y = view(m).completeOrthogonalDecomposition().solve(t);
  }

  Solution sol{to_vec(y), 0.0};
  if (!std::isfinite(inf_norm(sol.x))) sol.residual = INFINITY;
  else {
    Vec back = times_col(m, sol.x);
    for (std::size_t r = 0; r < back.size(); ++r)
      sol.residual = std::max(sol.residual, std::abs(back[r] - target[r]));
  }
  if (m.rows() == m.cols() && !(sol.residual <= tol))
    throw Error(Errc::SingularSystem,
                "solve_left: residual " + std::to_string(sol.residual) + " exceeds tolerance");
  return sol;
}

std::size_t numerical_rank(const Mat& m, double tol) {
  std::vector<Vec> basis;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r);
    Vec v(src.begin(), src.end());
    const double scale = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (scale == 0.0) continue;
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& q : basis) {
        const double d = std::inner_product(v.begin(), v.end(), q.begin(), 0.0);
        for (std::size_t c = 0; c < v.size(); ++c) v[c] -= d * q[c];
      }
    }
    const double left = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (left > tol * scale) {
      for (double& x : v) x /= left;
      basis.push_back(std::move(v));
    }
  }
  return basis.size();
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::below(std::size_t bound) {
  if (bound == 0) throw Error(Errc::InvalidArgument, "Rng::below: bound must be positive");
  const std::uint64_t b = bound;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % b);
}

Mat gaussian_mat(Rng& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw Error(Errc::InvalidArgument, "gaussian_mat: empty shape");
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (double& v : m.row(r)) v = rng.normal();
  return m;
}

}  // namespace gradcode
