#include <cmath>
#include <memory>

#include "doctest.h"
#include "sgdvi/bound.hpp"
#include "sgdvi/data_io.hpp"
#include "sgdvi/errors.hpp"
#include "sgdvi/models.hpp"
#include "sgdvi/optimizer.hpp"
#include "sgdvi/oracles.hpp"

using namespace sgdvi;

namespace {

std::shared_ptr<const Dataset> regression_data(const Matrix& x, const Vector& y) {
  auto d = std::make_shared<Dataset>();
  d->features = x;
  d->targets = y;
  return d;
}

double log_normal(double y, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * y * y / var;
}

}  // namespace

TEST_CASE("energy of the prior alone") {
  auto empty = regression_data(Matrix::Zero(0, 2), Vector::Zero(0));
  BayesLinearRegression blr(empty, 1.0);
  const double e = energy_estimate(Vector::Zero(2), blr, GaussianPrior{1.0}, blr.full_batch());
  CHECK(e == doctest::Approx(-1.8378770664093453).epsilon(1e-14));
}

TEST_CASE("quadratic energy matches a direct evaluation") {
  Rng rng(3);
  const Matrix a = oracle::random_symmetric(3, 0.5, 2.0, rng);
  const Vector mu = standard_normal(3, rng);
  QuadraticObjective q(a, mu);
  const double sigma0 = 1.7;
  for (const Vector& theta : {mu, Vector(standard_normal(3, rng))}) {
    const Vector d = theta - mu;
    const double direct = -1.5 * std::log(2.0 * M_PI * sigma0 * sigma0) -
                          0.5 * theta.squaredNorm() / (sigma0 * sigma0) - 0.5 * d.dot(a * d);
    CHECK(energy_estimate(theta, q, GaussianPrior{sigma0}, q.full_batch()) ==
          doctest::Approx(direct).epsilon(1e-13));
  }
}

TEST_CASE("full-batch energy is the mean of disjoint minibatch energies") {
  auto data = std::make_shared<const Dataset>(make_synthetic_regression(2, 12, 3, 0.3));
  BayesLinearRegression blr(data, 0.4);
  const GaussianPrior prior{0.8};
  Rng rng(5);
  const Vector theta = standard_normal(3, rng);
  const double full = energy_estimate(theta, blr, prior, blr.full_batch());
  double mean = 0.0;
  for (std::size_t b = 0; b < 4; ++b) {
    BatchSelector sel;
    for (std::size_t i = 0; i < 3; ++i) sel.indices.push_back(3 * b + i);
    sel.scale = 4.0;
    mean += energy_estimate(theta, blr, prior, sel) / 4.0;
  }
  CHECK(mean == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("bound_at") {
  EntropyLedger ledger(2.5);
  SUBCASE("t = 0") {
    const auto r = bound_at(0, ledger, -4.0);
    CHECK(r.iteration == 0);
    CHECK(r.entropy == 2.5);
    CHECK(r.bound == -1.5);
  }
  SUBCASE("all-zero deltas keep the initial entropy") {
    for (int i = 0; i < 7; ++i) ledger.append({0.0, EstimatorMode::exact, 0, true, false});
    CHECK(bound_at(7, ledger, -1.0).bound == 1.5);
  }
  SUBCASE("beyond the ledger") { CHECK_THROWS_AS(bound_at(1, ledger, 0.0), std::out_of_range); }
}

TEST_CASE("analytic evidence: empty data and a single point") {
  auto empty = regression_data(Matrix::Zero(0, 2), Vector::Zero(0));
  CHECK(analytic_evidence(BayesLinearRegression(empty, 1.0), GaussianPrior{1.0}) == 0.0);

  const double x = 1.3;
  const double y = -0.7;
  auto one = regression_data(Matrix::Constant(1, 1, x), Vector::Constant(1, y));
  CHECK(analytic_evidence(BayesLinearRegression(one, 1.0), GaussianPrior{1.0}) ==
        doctest::Approx(log_normal(y, x * x + 1.0)).epsilon(1e-13));
}

TEST_CASE("analytic evidence agrees with prior-sampling Monte Carlo") {
  const Dataset d = make_synthetic_regression(11, 5, 2, 0.5);
  auto data = std::make_shared<const Dataset>(d);
  const double noise = 0.8;
  const double sigma0 = 0.9;
  const double exact = analytic_evidence(BayesLinearRegression(data, noise), GaussianPrior{sigma0});
  const auto mc = oracle::linear_regression_evidence_mc(d.features, d.targets.col(0), noise, sigma0,
                                                        1'000'000, 42);
  CHECK(std::abs(exact - mc.value) < 3.0 * mc.standard_error + 1e-12);
  CHECK(std::abs(exact - mc.value) / std::abs(exact) < 5e-3);
}

TEST_CASE("quadratic evidence agrees with one-dimensional quadrature") {
  const double a = 2.3;
  const double mu = 0.6;
  const double sigma0 = 1.4;
  QuadraticObjective q(Matrix::Constant(1, 1, a), Vector::Constant(1, mu));
  double sum = 0.0;
  const double h = 1e-3;
  for (double t = -20.0; t <= 20.0; t += h)
    sum += std::exp(-0.5 * t * t / (sigma0 * sigma0) - 0.5 * a * (t - mu) * (t - mu));
  const double quad = std::log(sum * h / std::sqrt(2.0 * M_PI * sigma0 * sigma0));
  CHECK(analytic_evidence(q, GaussianPrior{sigma0}) == doctest::Approx(quad).epsilon(1e-9));
}

TEST_CASE("analytic evidence rejects non-conjugate models") {
  CHECK_THROWS_AS(analytic_evidence(GaussianMixture2D::default_posterior(), GaussianPrior{1.0}),
                  UnsupportedModel);
}

TEST_CASE("pushforward entropy") {
  const Matrix a = Vector{{1.0, 2.0}}.asDiagonal();
  const double s0 = std::log(2.0 * M_PI * M_E);  // D = 2, sigma0 = 1
  CHECK(analytic_pushforward_entropy(a, 1.0, 0.1, 0) == doctest::Approx(s0).epsilon(1e-15));
  CHECK(analytic_pushforward_entropy(a, 1.0, 0.1, 1) == doctest::Approx(s0 + std::log(0.72)).epsilon(1e-14));
  CHECK(analytic_pushforward_entropy(a, 1.0, 0.0, 50) == doctest::Approx(s0).epsilon(1e-15));
}

TEST_CASE("pushforward entropy telescopes and matches the moment covariance") {
  Rng rng(9);
  const Matrix a = oracle::random_symmetric(4, -0.5, 3.0, rng);
  const double alpha = 0.1;
  const double step = oracle::logdet_step_eig(a, alpha);
  double prev = analytic_pushforward_entropy(a, 0.7, alpha, 0);
  for (std::size_t t = 1; t <= 1000; ++t) {
    const double cur = analytic_pushforward_entropy(a, 0.7, alpha, t);
    CHECK(std::abs(cur - prev - step) < 1e-8);
    prev = cur;
  }
  for (std::size_t t : {0u, 1u, 7u, 30u}) {
    const auto m = analytic_pushforward_moments(a, Vector::Zero(4), 0.7, alpha, t);
    const double from_cov = 0.5 * std::log((2.0 * M_PI * M_E * m.covariance).determinant());
    CHECK(analytic_pushforward_entropy(a, 0.7, alpha, t) == doctest::Approx(from_cov).epsilon(1e-10));
  }
}

TEST_CASE("pushforward mean follows gradient descent") {
  const Matrix a = Vector{{1.0, 3.0}}.asDiagonal();
  const Vector mu{{2.0, -1.0}};
  const auto m = analytic_pushforward_moments(a, mu, 1.0, 0.1, 3);
  Vector theta = Vector::Zero(2);
  for (int i = 0; i < 3; ++i) theta -= 0.1 * a * (theta - mu);
  CHECK((m.mean - theta).norm() < 1e-14);
}

TEST_CASE("seed-averaged bound curve stays below the evidence and peaks near it") {
  auto data = std::make_shared<const Dataset>(make_synthetic_regression(13, 20, 3, 0.5));
  BayesLinearRegression blr(data, 0.5);
  const double evidence = analytic_evidence(blr, GaussianPrior{1.0});
  for (auto mode : {EstimatorMode::exact, EstimatorMode::taylor_probe}) {
    RunConfig c;
    c.alpha = 0.002;
    c.iterations = 60;
    c.estimator = mode;
    const std::size_t k = 40;
    const auto e = run_ensemble(blr, c, k);
    Matrix curves(static_cast<Eigen::Index>(k), 61);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t t = 0; t <= 60; ++t)
        curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = e.traces[i].records[t].bound;
    double best = -1e300;
    for (Eigen::Index t = 0; t <= 60; ++t) {
      const double mean = curves.col(t).mean();
      const double se = std::sqrt((curves.col(t).array() - mean).square().sum() / (k - 1.0) / k);
      CHECK(mean <= evidence + 3.0 * se);
      best = std::max(best, mean);
    }
    CHECK(best > evidence - 5.0);
  }
}

TEST_CASE("to_bits") { CHECK(to_bits(std::log(8.0)) == doctest::Approx(3.0).epsilon(1e-15)); }
