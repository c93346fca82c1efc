#include "sgdvi/bound.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sgdvi/errors.hpp"
#include "sgdvi/models.hpp"

namespace sgdvi {

double GaussianPrior::log_density(const ParamVector& theta) const {
  const double d = static_cast<double>(theta.size());
  const double var = sigma0 * sigma0;
  return -0.5 * d * std::log(2.0 * std::numbers::pi * var) - 0.5 * theta.squaredNorm() / var;
}

double energy_estimate(const ParamVector& theta, const Objective& objective,
                       const GaussianPrior& prior, const BatchSelector& batch) {
  return prior.log_density(theta) - objective.value(theta, batch);
}

BoundReport bound_at(std::size_t t, const EntropyLedger& ledger, double energy) {
  BoundReport r;
  r.iteration = t;
  r.energy = energy;
  r.entropy = ledger.entropy_at(t);
  r.bound = r.energy + r.entropy;
  return r;
}

namespace {

double blr_evidence(const BayesLinearRegression& model, double sigma0) {
  const Dataset& data = model.data();
  const auto n = static_cast<Eigen::Index>(data.size());
  if (n == 0) return 0.0;
  const Matrix& x = data.features;
  const Vector y = data.targets.col(0);
  Matrix cov = sigma0 * sigma0 * (x * x.transpose());
  cov.diagonal().array() += model.noise_sigma() * model.noise_sigma();
  const Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw Error("evidence covariance is not positive definite");
  const Vector white = llt.matrixL().solve(y);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * logdet -
         0.5 * white.squaredNorm();
}

double quadratic_evidence(const QuadraticObjective& model, double sigma0) {
  const Matrix& a = model.a();
  const Vector& mu = model.mu();
  Matrix m = sigma0 * sigma0 * a;
  m.diagonal().array() += 1.0;
  const Eigen::PartialPivLU<Matrix> lu(m);
  const double logdet = lu.matrixLU().diagonal().array().abs().log().sum();
  return -0.5 * logdet - 0.5 * mu.dot(a * lu.solve(mu));
}

}  // namespace

double analytic_evidence(const Objective& objective, const GaussianPrior& prior) {
  if (const auto* blr = dynamic_cast<const BayesLinearRegression*>(&objective))
    return blr_evidence(*blr, prior.sigma0);
  if (const auto* quad = dynamic_cast<const QuadraticObjective*>(&objective))
    return quadratic_evidence(*quad, prior.sigma0);
  throw UnsupportedModel("no closed-form evidence for " + std::string(to_string(objective.kind())));
}

GaussianMoments analytic_pushforward_moments(const Matrix& a, const Vector& mu, double sigma0,
                                             double alpha, std::size_t t) {
  const auto d = a.rows();
  Matrix m = -alpha * a;
  m.diagonal().array() += 1.0;
  Matrix mt = Matrix::Identity(d, d);
  for (std::size_t s = 0; s < t; ++s) mt = m * mt;
  GaussianMoments out;
  // theta_t - mu = M^t (theta_0 - mu)
  out.mean = mu - mt * mu;
  out.covariance = sigma0 * sigma0 * (mt * mt.transpose());
  return out;
}

double analytic_pushforward_entropy(const Matrix& a, double sigma0, double alpha, std::size_t t) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  const Vector& lam = eig.eigenvalues();
  double per_step = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) per_step += std::log(std::abs(1.0 - alpha * lam[i]));
  return gaussian_entropy(static_cast<std::size_t>(a.rows()), sigma0) +
         static_cast<double>(t) * per_step;
}

}  // namespace sgdvi
