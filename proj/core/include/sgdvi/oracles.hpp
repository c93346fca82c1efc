#pragma once

#include <cstdint>

#include "sgdvi/models.hpp"
#include "sgdvi/types.hpp"

/// Reference computations that share no code path with the estimators they
/// check: eigendecompositions instead of LU, finite differences instead of
/// analytic derivatives, Monte Carlo instead of Gaussian algebra.
namespace sgdvi::oracle {

/// sum_i log|1 - alpha lambda_i| from a symmetric eigendecomposition.
double logdet_step_eig(const Matrix& h, double alpha);

/// -alpha tr(H) - alpha^2 tr(H^2).
double taylor_trace_bound(const Matrix& h, double alpha);

/// -alpha r'Hr - alpha^2 r'H(Hr) with dense products.
double taylor_quadratic_form(const Matrix& h, const Vector& r, double alpha);

/// Central differences of the value: (L(theta + eps e_i) - L(theta - eps e_i)) / 2 eps.
Vector fd_gradient(const Objective& objective, const ParamVector& theta,
                   const BatchSelector& batch, double eps = 1e-6);

/// Directional derivative of the value along `dir` by central differences.
double fd_directional(const Objective& objective, const ParamVector& theta, const Vector& dir,
                      const BatchSelector& batch, double eps = 1e-6);

/// (grad L(theta + eps v) - grad L(theta - eps v)) / 2 eps.
Vector fd_hvp(const Objective& objective, const ParamVector& theta, const Vector& v,
              const BatchSelector& batch, double eps = 1e-5);

/// Gaussian NLL of a linear model evaluated with explicit loops.
double linear_gaussian_nll(const Matrix& x, const Vector& y, const Vector& w, double noise_sigma);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// log p(y) for linear-Gaussian regression by averaging the likelihood over
/// `samples` draws from the N(0, sigma0^2 I) prior. The standard error is the
/// delta-method error of the log of the sample mean.
MonteCarloEstimate linear_regression_evidence_mc(const Matrix& x, const Vector& y,
                                                 double noise_sigma, double sigma0,
                                                 std::size_t samples, std::uint64_t seed);

/// Random symmetric matrix with eigenvalues drawn uniformly in [lo, hi] and a
/// Haar-like random eigenbasis (QR of a Gaussian matrix).
Matrix random_symmetric(Eigen::Index n, double lo, double hi, Rng& rng);

}  // namespace sgdvi::oracle
