#include "gradcode/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gradcode/error.hpp"

namespace gradcode {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_beta(const Dataset& data, std::span<const double> beta) {
  if (beta.size() != data.features())
    throw Error(Errc::DimensionMismatch, "beta has " + std::to_string(beta.size()) +
                                             " entries, dataset has " +
                                             std::to_string(data.features()) + " features");
}

const RowRange& partition_at(const Dataset& data, std::size_t part) {
  if (part >= data.partitions().size())
    throw Error(Errc::IndexOutOfRange, "partition " + std::to_string(part) + " out of range");
  return data.partitions()[part];
}

void accumulate_gradient(const Dataset& data, RowRange range, std::span<const double> beta, Vec& g) {
  for (std::size_t i = range.begin; i < range.end; ++i) {
    auto xi = data.x().row(i);
    const double w = sigmoid(dot(xi, beta)) - static_cast<double>(data.y()[i]);
    for (std::size_t c = 0; c < xi.size(); ++c) g[c] += w * xi[c];
  }
}

double range_loss(const Dataset& data, RowRange range, std::span<const double> beta) {
  double acc = 0.0;
  for (std::size_t i = range.begin; i < range.end; ++i) {
    const double z = dot(data.x().row(i), beta);
    acc += log1pexp(z) - static_cast<double>(data.y()[i]) * z;
  }
  return acc;
}

}  // namespace

std::vector<RowRange> split_contiguous(std::size_t d, std::size_t k) {
  if (k == 0) throw Error(Errc::InvalidArgument, "need at least one partition");
  if (d < k)
    throw Error(Errc::InvalidArgument, "cannot split " + std::to_string(d) + " rows into " +
                                           std::to_string(k) + " non-empty partitions");
  const std::size_t base = d / k;
  std::vector<RowRange> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = {j * base, (j + 1) * base};
  out.back().end = d;
  return out;
}

Dataset::Dataset(Mat features, std::vector<std::uint8_t> labels, std::vector<RowRange> partitions)
    : x_(std::move(features)), y_(std::move(labels)), parts_(std::move(partitions)) {
  if (y_.size() != x_.rows()) throw Error(Errc::DimensionMismatch, "labels and rows differ in count");
  for (auto v : y_)
    if (v > 1) throw Error(Errc::InvalidArgument, "labels must be 0 or 1");
  std::size_t next = 0;
  for (const RowRange& r : parts_) {
    if (r.begin != next || r.end < r.begin)
      throw Error(Errc::InvalidArgument, "partitions must tile the rows contiguously");
    next = r.end;
  }
  if (next != x_.rows()) throw Error(Errc::InvalidArgument, "partitions must cover every row");
}

Dataset Dataset::with_partitions(std::size_t k) const {
  return Dataset(x_, y_, split_contiguous(rows(), k));
}

SyntheticData gen_synthetic(Rng& rng, std::size_t d, std::size_t p) {
  if (d == 0 || p == 0) throw Error(Errc::InvalidArgument, "gen_synthetic needs d, p >= 1");
  auto draw = [&] {
    Vec v(p);
    for (double& e : v) e = rng.normal();
    return v;
  };
  const Vec mu1 = draw();
  const Vec mu2 = draw();
  Vec beta_star = draw();

  Mat x(d, p);
  std::vector<std::uint8_t> y(d);
  for (std::size_t i = 0; i < d; ++i) {
    const Vec& mu = rng.uniform() < 0.5 ? mu1 : mu2;
    auto row = x.row(i);
    for (std::size_t c = 0; c < p; ++c) row[c] = mu[c] + rng.normal();
    const double kappa = 1.0 / (std::exp(2.0 * dot(row, beta_star)) + 1.0);
    y[i] = rng.uniform() < kappa ? 1 : 0;
  }
  return {Dataset(std::move(x), std::move(y), {{0, d}}), std::move(beta_star)};
}

TrainHoldout split_holdout(const Dataset& data, Rng& rng, double holdout_fraction) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw Error(Errc::InvalidArgument, "holdout fraction must be in (0, 1)");
  const std::size_t d = data.rows();
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = d; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const auto n_train = static_cast<std::size_t>(
      std::ceil((1.0 - holdout_fraction) * static_cast<double>(d) - 1e-9));
  if (n_train == 0 || n_train == d)
    throw Error(Errc::InvalidArgument, "dataset too small for a train/holdout split");

  auto take = [&](std::size_t from, std::size_t to) {
    Mat x(to - from, data.features());
    std::vector<std::uint8_t> y(to - from);
    for (std::size_t i = from; i < to; ++i) {
      auto src = data.x().row(order[i]);
      std::copy(src.begin(), src.end(), x.row(i - from).begin());
      y[i - from] = data.y()[order[i]];
    }
    return Dataset(std::move(x), std::move(y), {{0, to - from}});
  };
  return {take(0, n_train), take(n_train, d)};
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log1pexp(double z) noexcept {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

Vec partial_gradient(const Dataset& data, std::size_t part, std::span<const double> beta) {
  check_beta(data, beta);
  Vec g(data.features(), 0.0);
  accumulate_gradient(data, partition_at(data, part), beta, g);
  return g;
}

Vec full_gradient(const Dataset& data, std::span<const double> beta) {
  check_beta(data, beta);
  Vec g(data.features(), 0.0);
  accumulate_gradient(data, {0, data.rows()}, beta, g);
  return g;
}

double partition_loss(const Dataset& data, std::size_t part, std::span<const double> beta) {
  check_beta(data, beta);
  return range_loss(data, partition_at(data, part), beta);
}

double loss(const Dataset& data, std::span<const double> beta) {
  check_beta(data, beta);
  return range_loss(data, {0, data.rows()}, beta);
}

Vec scores(const Dataset& data, std::span<const double> beta) {
  check_beta(data, beta);
  Vec out(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out[i] = dot(data.x().row(i), beta);
  return out;
}

double auc(std::span<const double> score, std::span<const std::uint8_t> labels) {
  if (score.size() != labels.size())
    throw Error(Errc::DimensionMismatch, "scores and labels differ in length");
  std::size_t pos = 0;
  for (auto l : labels) pos += l != 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0)
    throw Error(Errc::DegenerateLabels, "AUC needs at least one positive and one negative label");

  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });

  // Sum of mid-ranks (1-based) of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && score[order[j]] == score[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]]) rank_sum += mid;
    i = j;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

void OptimizerConfig::validate() const {
  if (method == Method::NAG && !(eta > 0.0 && std::isfinite(eta)))
    throw Error(Errc::InvalidArgument, "NAG step eta must be > 0");
  if (method == Method::DecayingGD) {
    if (!(c1 > 0.0 && std::isfinite(c1))) throw Error(Errc::InvalidArgument, "c1 must be > 0");
    if (!(c2 >= 0.0 && std::isfinite(c2))) throw Error(Errc::InvalidArgument, "c2 must be >= 0");
  }
}

Vec decaying_step(std::span<const double> beta, std::span<const double> g, std::size_t t, double c1,
                  double c2) {
  if (beta.size() != g.size()) throw Error(Errc::DimensionMismatch, "gradient length mismatch");
  const double denom = static_cast<double>(t) + c2;
  if (!(denom > 0.0)) throw Error(Errc::InvalidArgument, "step c1/(t+c2) undefined at t=0, c2=0");
  const double rate = c1 / denom;
  Vec out(beta.begin(), beta.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= rate * g[i];
  return out;
}

Optimizer::Optimizer(OptimizerConfig config, Vec beta0)
    : method_(config.method), cfg_(config), beta_(std::move(beta0)), lookahead_(beta_) {
  cfg_.validate();
}

void Optimizer::step(std::span<const double> g) {
  if (g.size() != beta_.size()) throw Error(Errc::DimensionMismatch, "gradient length mismatch");
  for (double v : g)
    if (!std::isfinite(v))
      throw Error(Errc::NonFinite, "non-finite gradient at step " + std::to_string(t_));

  if (method_ == Method::DecayingGD) {
    beta_ = decaying_step(beta_, g, t_, cfg_.c1, cfg_.c2);
  } else {
    // x_k = y_{k-1} - eta g(y_{k-1});  y_k = x_k + (k-1)/(k+2) (x_k - x_{k-1})
    Vec next(lookahead_);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] -= cfg_.eta * g[i];
    const double k = static_cast<double>(t_ + 1);
    const double momentum = (k - 1.0) / (k + 2.0);
    for (std::size_t i = 0; i < next.size(); ++i)
      lookahead_[i] = next[i] + momentum * (next[i] - beta_[i]);
    beta_ = std::move(next);
  }
  ++t_;
  for (std::size_t i = 0; i < beta_.size(); ++i)
    if (!std::isfinite(beta_[i]) || !std::isfinite(query_point()[i]))
      throw Error(Errc::NonFinite, "iterate diverged at step " + std::to_string(t_));
}

}  // namespace gradcode
