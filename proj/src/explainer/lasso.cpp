#include <algorithm>
#include <cmath>
#include <numeric>

#include "superlime/error.hpp"
#include "superlime/explainer.hpp"

namespace superlime::lime {

namespace {

constexpr std::size_t kMaxSweeps = 10000;
constexpr double kTolerance = 1e-13;

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

WeightedLasso::WeightedLasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights) {
  if (x.rows() != y.size() || weights.size() != y.size() || y.size() < 2) {
    throw InvalidArgument("lasso: design, response and weights disagree in length (or fewer than 2 rows)");
  }
  if ((weights.array() < 0.0).any() || weights.sum() <= 0.0) {
    throw InvalidArgument("lasso: weights must be non-negative with a positive sum");
  }
  // Weighted centring takes the unpenalised intercept out of the problem.
  const double total = weights.sum();
  x_mean_ = (x.transpose() * weights) / total;
  y_mean_ = weights.dot(y) / total;
  const Eigen::MatrixXd xc = x.rowwise() - x_mean_.transpose();
  const Eigen::VectorXd yc = y.array() - y_mean_;
  const Eigen::MatrixXd wx = weights.asDiagonal() * xc;
  gram_ = xc.transpose() * wx;
  cov_ = wx.transpose() * yc;
  lambda_max_ = cov_.size() > 0 ? 2.0 * cov_.cwiseAbs().maxCoeff() : 0.0;
}

LassoFit WeightedLasso::fit(double lambda, const Eigen::VectorXd& warm_start) const {
  const Eigen::Index p = cov_.size();
  LassoFit out;
  out.coef = warm_start.size() == p ? warm_start : Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad = cov_ - gram_ * out.coef;  // c - G beta
  const double half = 0.5 * lambda;

  for (out.sweeps = 1; out.sweeps <= kMaxSweeps; ++out.sweeps) {
    double max_step = 0.0;
    double max_coef = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = gram_(j, j);
      if (gjj <= 0.0) {
        out.coef[j] = 0.0;
        continue;
      }
      const double old = out.coef[j];
      const double next = soft_threshold(grad[j] + gjj * old, half) / gjj;
      const double step = next - old;
      if (step != 0.0) {
        grad -= gram_.col(j) * step;
        out.coef[j] = next;
      }
      max_step = std::max(max_step, std::abs(step));
      max_coef = std::max(max_coef, std::abs(next));
    }
    if (max_step <= kTolerance * std::max(1.0, max_coef)) break;
  }
  out.intercept = y_mean_ - x_mean_.dot(out.coef);
  return out;
}

Surrogate fit_k_lasso(std::span<const PerturbedSample> samples, std::size_t k, std::size_t target_class) {
  if (samples.size() < 2) throw InvalidArgument("K-Lasso needs at least 2 samples");
  if (k < 1) throw InvalidArgument("K must be >= 1");
  const std::size_t n = samples.size();
  const std::size_t p = samples.front().z_prime.size();
  if (p == 0) throw InvalidArgument("samples carry no features");

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[i];
    if (s.z_prime.size() != p) throw InvalidArgument("samples disagree in feature count");
    if (target_class >= s.prediction.probabilities.size()) {
      throw InvalidArgument("target class " + std::to_string(target_class) + " out of range");
    }
    for (std::size_t j = 0; j < p; ++j) x(i, j) = s.z_prime[j];
    y[i] = s.prediction.probabilities[target_class];
    w[i] = s.proximity;
  }
  if (y.maxCoeff() - y.minCoeff() <= 1e-12) {
    throw ZeroSignalError("every perturbed sample scored " + std::to_string(y[0]) + " on class " +
                          std::to_string(target_class) + "; there is no signal to explain");
  }

  // Walk a geometric lambda path until K coefficients are active.
  const WeightedLasso lasso(x, y, w);
  const std::size_t want = std::min(k, p);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  if (lasso.lambda_max() > 0.0) {
    for (std::size_t step = 0; step < kLassoPathSteps; ++step) {
      const double lambda =
          lasso.lambda_max() * std::pow(kLassoPathRatio, static_cast<double>(step) / (kLassoPathSteps - 1));
      beta = lasso.fit(lambda, beta).coef;
      if (static_cast<std::size_t>((beta.array() != 0.0).count()) >= want) break;
    }
  }
  // Largest |beta| first; an overshoot past K keeps the strongest K.
  std::vector<std::uint32_t> order(p);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return std::abs(beta[a]) > std::abs(beta[b]); });
  order.resize(want);

  // Weighted least-squares refit on the chosen columns with a tiny ridge.
  const auto m = static_cast<Eigen::Index>(want);
  Eigen::MatrixXd a(n, m + 1);
  a.col(0).setOnes();
  for (Eigen::Index j = 0; j < m; ++j) a.col(j + 1) = x.col(order[j]);
  Eigen::MatrixXd normal = a.transpose() * w.asDiagonal() * a;
  normal.diagonal().tail(m).array() += kRefitRidge;
  const Eigen::VectorXd rhs = a.transpose() * (w.asDiagonal() * y);
  const Eigen::VectorXd theta = normal.ldlt().solve(rhs);
  if (!theta.allFinite()) throw ComputeError("K-Lasso refit produced non-finite weights");

  Surrogate out;
  out.target_class = target_class;
  out.intercept = theta[0];
  for (Eigen::Index j = 0; j < m; ++j) out.selected.push_back({order[j], theta[j + 1]});
  std::stable_sort(out.selected.begin(), out.selected.end(), [](const WeightedPatch& l, const WeightedPatch& r) {
    return std::abs(l.weight) > std::abs(r.weight);
  });
  return out;
}

}  // namespace superlime::lime
