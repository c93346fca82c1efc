#pragma once

#include <cstddef>

#include "sgdvi/objective.hpp"
#include "sgdvi/optimizer.hpp"

namespace sgdvi {

/// Isotropic N(0, sigma0^2 I) prior over the parameters.
struct GaussianPrior {
  double sigma0 = 1.0;

  double log_density(const ParamVector& theta) const;
};

/// One point on the bound curve. bound == energy + entropy.
struct BoundReport {
  std::size_t iteration = 0;
  double energy = 0.0;
  double entropy = 0.0;
  double bound = 0.0;
};

/// log p(theta) + log p(batch | theta) with the batch term scaled to the full
/// dataset: the exact log joint for the full batch, unbiased otherwise.
double energy_estimate(const ParamVector& theta, const Objective& objective,
                       const GaussianPrior& prior, const BatchSelector& batch);

/// energy + S_t with S_t = S_0 + sum_{s<t} delta_s. Throws std::out_of_range
/// when the ledger has fewer than t steps.
BoundReport bound_at(std::size_t t, const EntropyLedger& ledger, double energy);

/// Closed-form log marginal likelihood for conjugate Gaussian models:
///  - bayes-linear-regression: y ~ N(0, sigma0^2 X X^T + noise^2 I);
///  - quadratic, read as an unnormalized likelihood exp(-L):
///    log Z = -1/2 log|I + sigma0^2 A| - 1/2 mu^T A (I + sigma0^2 A)^{-1} mu.
/// Throws UnsupportedModel for everything else.
double analytic_evidence(const Objective& objective, const GaussianPrior& prior);

/// Mean and covariance of theta_t when theta_0 ~ N(0, sigma0^2 I) is pushed
/// through t full-batch gradient steps on the quadratic (A, mu).
struct GaussianMoments {
  Vector mean;
  Matrix covariance;
};

GaussianMoments analytic_pushforward_moments(const Matrix& a, const Vector& mu, double sigma0,
                                             double alpha, std::size_t t);

/// 1/2 log|2 pi e Sigma_t| for the same affine dynamics, from the eigenvalues
/// of the symmetric matrix A: S_0 + t * sum_i log|1 - alpha lambda_i|.
double analytic_pushforward_entropy(const Matrix& a, double sigma0, double alpha, std::size_t t);

/// Nats to bits.
inline double to_bits(double nats) { return nats / 0.69314718055994530942; }

}  // namespace sgdvi
