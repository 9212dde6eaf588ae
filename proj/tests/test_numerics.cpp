#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gradcode/combinatorics.hpp"
#include "gradcode/error.hpp"
#include "gradcode/numerics.hpp"

using namespace gradcode;

namespace {

// Plain Gaussian elimination with partial pivoting, used as an independent
// oracle for square systems A y = b.
Vec gauss_solve(Mat a, Vec b) {
  const std::size_t n = a.rows();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
      b[r] -= f * b[c];
    }
  }
  Vec y(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= a(i, j) * y[j];
    y[i] = acc / a(i, i);
  }
  return y;
}

Mat transpose(const Mat& m) {
  Mat t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

Mat multiply(const Mat& a, const Mat& b) {
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("matrix construction checks sizes") {
    CHECK_THROWS_AS(Mat(2, 2, std::vector<double>{1, 2, 3}), Error);
    Mat m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(m(1, 2) == 6);
    CHECK(m.col(1) == Vec{2, 5});
    const std::vector<std::size_t> rows{1};
    CHECK(m.select_rows(rows) == Mat(1, 3, std::vector<double>{4, 5, 6}));
    const std::vector<std::size_t> cols{2, 0};
    CHECK(m.select_cols(cols) == Mat(2, 2, std::vector<double>{3, 1, 6, 4}));
    m(0, 0) = std::nan("");
    CHECK_FALSE(m.all_finite());
  }

  TEST_CASE("solve_left agrees with Gaussian elimination") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + rng.below(6);
      const Mat a = gaussian_mat(rng, n, n);
      Vec b(n);
      for (double& v : b) v = rng.normal();
      const Solution got = solve_left(a, b);
      const Vec want = gauss_solve(a, b);
      for (std::size_t i = 0; i < n; ++i) CHECK(got.x[i] == doctest::Approx(want[i]).epsilon(1e-8));
      CHECK(got.residual < 1e-10);
    }
  }

  TEST_CASE("solve_left rejects a singular square system") {
    const Mat a(2, 2, std::vector<double>{1, 2, 2, 4});
    const Vec b{1, 0};
    try {
      solve_left(a, b);
      FAIL("expected SingularSystem");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SingularSystem);
    }
  }

  TEST_CASE("solve_right returns the minimum-norm solution") {
    // x * M = t with M 4x2: four unknowns, two equations.
    Rng rng(5);
    const Mat m = gaussian_mat(rng, 4, 2);
    const Vec t{1.0, -2.0};
    const Solution s = solve_right(m, t);
    CHECK(s.residual < 1e-12);
    // Minimum-norm oracle: x = t (M^T M)^-1 M^T.
    const Mat mt = transpose(m);
    const Vec z = gauss_solve(multiply(mt, m), t);
    const Vec want = row_times(z, mt);
    for (std::size_t i = 0; i < 4; ++i) CHECK(s.x[i] == doctest::Approx(want[i]).epsilon(1e-9));
  }

  TEST_CASE("solve_right reports the residual of an inconsistent system") {
    const Mat m(1, 2, std::vector<double>{1, 0});
    const Vec t{1, 1};
    const Solution s = solve_right(m, t);
    CHECK(s.residual == doctest::Approx(1.0));
  }

  TEST_CASE("numerical rank of constructed low-rank products") {
    Rng rng(3);
    for (std::size_t k = 1; k <= 5; ++k) {
      const Mat a = multiply(gaussian_mat(rng, 7, k), gaussian_mat(rng, k, 6));
      CHECK(numerical_rank(a) == k);
    }
    CHECK(numerical_rank(Mat(3, 3)) == 0);
    CHECK(numerical_rank(Mat::identity(4)) == 4);
  }

  TEST_CASE("rng is reproducible and well distributed") {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

    Rng rng(1);
    double sum = 0, sq = 0;
    const int count = 200000;
    for (int i = 0; i < count; ++i) {
      const double z = rng.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / count) < 0.01);
    CHECK(std::abs(sq / count - 1.0) < 0.02);

    std::vector<int> bins(7);
    for (int i = 0; i < 70000; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      ++bins[rng.below(7)];
    }
    for (int c : bins) CHECK(std::abs(c - 10000) < 500);
  }

  TEST_CASE("binomial and combination enumeration") {
    CHECK(binomial(12, 2) == 66);
    CHECK(binomial(10, 4) == 210);
    CHECK(binomial(5, 7) == 0);
    CHECK(binomial(62, 31) == 465428353255261088ULL);
    CHECK(binomial(200, 100) == UINT64_MAX);

    std::vector<std::vector<std::size_t>> seen;
    for_each_combination(6, 3, [&](const std::vector<std::size_t>& c) { seen.push_back(c); });
    CHECK(seen.size() == binomial(6, 3));
    CHECK(std::is_sorted(seen.begin(), seen.end()));
    CHECK(std::set(seen.begin(), seen.end()).size() == seen.size());

    int visits = 0;
    for_each_combination(10, 2, [&](const std::vector<std::size_t>&) { return ++visits < 5; });
    CHECK(visits == 5);
  }
}
