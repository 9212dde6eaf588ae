#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gradcode/numerics.hpp"

namespace gradcode {

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

// k contiguous ranges over [0, d); the last absorbs d mod k.
std::vector<RowRange> split_contiguous(std::size_t d, std::size_t k);

// Labelled rows for logistic regression, cut into partitions.
class Dataset {
 public:
  Dataset() = default;
  // Throws InvalidArgument unless labels are 0/1 and the partitions tile [0, d).
  Dataset(Mat features, std::vector<std::uint8_t> labels, std::vector<RowRange> partitions);

  std::size_t rows() const noexcept { return x_.rows(); }
  std::size_t features() const noexcept { return x_.cols(); }
  const Mat& x() const noexcept { return x_; }
  const std::vector<std::uint8_t>& y() const noexcept { return y_; }
  const std::vector<RowRange>& partitions() const noexcept { return parts_; }

  Dataset with_partitions(std::size_t k) const;

 private:
  Mat x_;
  std::vector<std::uint8_t> y_;
  std::vector<RowRange> parts_;
};

struct SyntheticData {
  Dataset data;
  Vec beta_star;
};

// Rows from 0.5 N(mu1, I) + 0.5 N(mu2, I) with mu1, mu2, beta* ~ N(0, I);
// labels y ~ Bernoulli(1 / (exp(2 x.beta*) + 1)).
// Returned as a single partition.
SyntheticData gen_synthetic(Rng& rng, std::size_t d, std::size_t p);

struct TrainHoldout {
  Dataset train;
  Dataset holdout;
};

// Seeded shuffle, then the first ceil((1 - holdout_fraction) d) rows train.
TrainHoldout split_holdout(const Dataset& data, Rng& rng, double holdout_fraction = 0.2);

double sigmoid(double z) noexcept;
// log(1 + exp(z)) without overflow.
double log1pexp(double z) noexcept;

// Sum over the partition of (sigmoid(x.beta) - y) x.
Vec partial_gradient(const Dataset& data, std::size_t part, std::span<const double> beta);
Vec full_gradient(const Dataset& data, std::span<const double> beta);

// Unregularized negative log-likelihood, summed over rows.
double partition_loss(const Dataset& data, std::size_t part, std::span<const double> beta);
double loss(const Dataset& data, std::span<const double> beta);

Vec scores(const Dataset& data, std::span<const double> beta);

// Mann-Whitney AUC: P(score+ > score-) + P(score+ == score-) / 2.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

enum class Method { NAG, DecayingGD };

struct OptimizerConfig {
  Method method = Method::NAG;
  // Defaults come from a grid search on the d = 10^4, p = 100 synthetic set
  // (mean training loss over 100 iterations, n = 12, s = 2). Gradients are
  // sums over rows, so these scale inversely with d.
  double eta = 3e-5;   // NAG constant step
  double c1 = 0.3;     // DecayingGD step c1 / (t + c2)
  double c2 = 1e4;
  std::size_t iterations = 100;

  void validate() const;
};

// beta - c1 / (t + c2) * g
Vec decaying_step(std::span<const double> beta, std::span<const double> g, std::size_t t,
                  double c1, double c2);

// Holds the iterate and, for NAG, the look-ahead point at which the next
// gradient must be evaluated.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, Vec beta0);

  const Vec& query_point() const noexcept { return method_ == Method::NAG ? lookahead_ : beta_; }
  const Vec& model() const noexcept { return beta_; }
  std::size_t steps() const noexcept { return t_; }

  // Throws NonFinite for a non-finite gradient or a diverged iterate.
  void step(std::span<const double> g);

 private:
  Method method_;
  OptimizerConfig cfg_;
  Vec beta_;
  Vec lookahead_;
  std::size_t t_ = 0;
};

}  // namespace gradcode
