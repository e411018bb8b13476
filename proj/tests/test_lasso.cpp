#include <cmath>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "superlime/error.hpp"
#include "superlime/explainer.hpp"

using namespace superlime;
using namespace superlime::lime;

namespace {

lime::PerturbedSample sample(std::vector<std::uint8_t> z, double y, double proximity) {
  return {std::move(z), classify::Prediction{{1.0 - y, y}, {"clean", "indicator"}}, proximity};
}

}  // namespace

TEST_CASE("coordinate descent equals soft thresholding on orthonormal designs") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    // Columns 1..5 of Q from [1 | random] are orthonormal and orthogonal to 1.
    const Eigen::Index n = 12 + static_cast<Eigen::Index>(rng() % 20);
    Eigen::MatrixXd a(n, 6);
    a.col(0).setOnes();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 1; j < 6; ++j) a(i, j) = gauss(rng);
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(n, 6);
    const Eigen::MatrixXd x = q.rightCols(5);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = 3.0 * gauss(rng);

    const WeightedLasso lasso(x, y, Eigen::VectorXd::Ones(n));
    const double lambda = lasso.lambda_max() * unit(rng);
    const auto fit = lasso.fit(lambda);
    CAPTURE(c);
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double ls = x.col(j).dot(y);
      CHECK(std::abs(fit.coef[j] - oracle::soft_threshold(ls, lambda / 2.0)) < 1e-8);
    }
    CHECK(std::abs(fit.intercept - y.mean()) < 1e-8);
  }
}

TEST_CASE("lambda_max zeroes every coefficient") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd x(30, 4);
  Eigen::VectorXd y(30), w(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = gauss(rng);
    y[i] = gauss(rng);
    w[i] = 0.1 + std::abs(gauss(rng));
  }
  const WeightedLasso lasso(x, y, w);
  CHECK(lasso.fit(lasso.lambda_max()).coef.isZero());
  CHECK(!lasso.fit(0.9 * lasso.lambda_max()).coef.isZero());
}

TEST_CASE("K equal to the feature count reproduces weighted least squares") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int c = 0; c < 10; ++c) {
    const std::size_t p = 3 + rng() % 5;
    std::vector<PerturbedSample> samples;
    std::vector<std::vector<double>> rows;
    std::vector<double> ys, ws;
    for (int i = 0; i < 80; ++i) {
      std::vector<std::uint8_t> z(p);
      std::vector<double> row(p);
      double y = 0.3;
      for (std::size_t j = 0; j < p; ++j) {
        z[j] = static_cast<std::uint8_t>(rng() & 1);
        row[j] = z[j];
        y += 0.05 * static_cast<double>(j + 1) * z[j];
      }
      y = std::clamp(y + 0.01 * gauss(rng), 0.0, 1.0);
      const double w = unit(rng);
      samples.push_back(sample(z, y, w));
      rows.push_back(row);
      ys.push_back(y);
      ws.push_back(w);
    }
    const auto s = fit_k_lasso(samples, p, 1);
    const auto theta = oracle::weighted_least_squares(rows, ys, ws);
    REQUIRE(s.selected.size() == p);
    CHECK(std::abs(s.intercept - theta[0]) < 1e-6);
    for (const auto& wp : s.selected) CHECK(std::abs(wp.weight - theta[wp.segment + 1]) < 1e-6);
  }
}

TEST_CASE("noiseless single-feature response is recovered exactly") {
  std::mt19937_64 rng(31);
  std::vector<PerturbedSample> samples;
  samples.push_back(sample(std::vector<std::uint8_t>(8, 1), 0.0, 1.0));
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint8_t> z(8);
    for (auto& b : z) b = static_cast<std::uint8_t>(rng() & 1);
    samples.push_back(sample(z, 0.0, proximity(z, 0.25)));
  }
  // y = 2 z'[3] sits in the class-1 slot; the simplex is not needed here.
  for (auto& s : samples) s.prediction.probabilities = {0.0, 2.0 * s.z_prime[3]};
  const auto s = fit_k_lasso(samples, 1, 1);
  REQUIRE(s.selected.size() == 1);
  CHECK(s.selected[0].segment == 3);
  CHECK(std::abs(s.selected[0].weight - 2.0) < 1e-6);
  CHECK(std::abs(s.intercept) < 1e-6);
}

TEST_CASE("selection cardinality is min(K, features)") {
  std::mt19937_64 rng(41);
  for (std::size_t p : {1u, 2u, 5u, 9u}) {
    std::vector<PerturbedSample> samples;
    for (int i = 0; i < 60; ++i) {
      std::vector<std::uint8_t> z(p);
      for (auto& b : z) b = static_cast<std::uint8_t>(rng() & 1);
      // Only feature 0 matters, so the lasso path alone never activates K.
      samples.push_back(sample(z, 0.2 + 0.5 * z[0], 1.0));
    }
    for (std::size_t k : {1u, 3u, 7u, 12u}) {
      const auto s = fit_k_lasso(samples, k, 1);
      CHECK(s.selected.size() == std::min(k, p));
      for (const auto& wp : s.selected) CHECK(wp.segment < p);
    }
  }
}

TEST_CASE("flat responses raise ZeroSignalError") {
  std::vector<PerturbedSample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(sample({static_cast<std::uint8_t>(i & 1), 1}, 0.4, 1.0));
  CHECK_THROWS_AS(fit_k_lasso(samples, 1, 1), ZeroSignalError);
  CHECK_THROWS_AS(fit_k_lasso(std::span(samples).first(1), 1, 1), InvalidArgument);
  CHECK_THROWS_AS(fit_k_lasso(samples, 0, 1), InvalidArgument);
}
