#include "sgdvi/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace sgdvi::oracle {

double logdet_step_eig(const Matrix& h, double alpha) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    sum += std::log(std::abs(1.0 - alpha * eig.eigenvalues()[i]));
  return sum;
}

double taylor_trace_bound(const Matrix& h, double alpha) {
  double tr = 0.0;
  double tr2 = 0.0;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    tr += h(i, i);
    for (Eigen::Index j = 0; j < h.cols(); ++j) tr2 += h(i, j) * h(j, i);
  }
  return -alpha * tr - alpha * alpha * tr2;
}

double taylor_quadratic_form(const Matrix& h, const Vector& r, double alpha) {
  const Vector hr = h * r;
  return -alpha * r.dot(hr) - alpha * alpha * hr.dot(hr);
}

Vector fd_gradient(const Objective& objective, const ParamVector& theta,
                   const BatchSelector& batch, double eps) {
  Vector g(theta.size());
  ParamVector p = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    p[i] = theta[i] + eps;
    const double up = objective.value(p, batch);
    p[i] = theta[i] - eps;
    const double down = objective.value(p, batch);
    p[i] = theta[i];
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

double fd_directional(const Objective& objective, const ParamVector& theta, const Vector& dir,
                      const BatchSelector& batch, double eps) {
  return (objective.value(theta + eps * dir, batch) - objective.value(theta - eps * dir, batch)) /
         (2.0 * eps);
}

Vector fd_hvp(const Objective& objective, const ParamVector& theta, const Vector& v,
              const BatchSelector& batch, double eps) {
  return (objective.gradient(theta + eps * v, batch) - objective.gradient(theta - eps * v, batch)) /
         (2.0 * eps);
}

double linear_gaussian_nll(const Matrix& x, const Vector& y, const Vector& w, double noise_sigma) {
  const double var = noise_sigma * noise_sigma;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double pred = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) pred += x(i, j) * w[j];
    const double r = y[i] - pred;
    nll += 0.5 * r * r / var + 0.5 * std::log(2.0 * std::numbers::pi * var);
  }
  return nll;
}

MonteCarloEstimate linear_regression_evidence_mc(const Matrix& x, const Vector& y,
                                                 double noise_sigma, double sigma0,
                                                 std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> logs(samples);
  Vector w(x.cols());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = sigma0 * normal(rng);
    logs[s] = -linear_gaussian_nll(x, y, w, noise_sigma);
    mx = std::max(mx, logs[s]);
  }
  // Scaled weights u_s = exp(l_s - max); log mean = max + log(mean u).
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double l : logs) {
    const double u = std::exp(l - mx);
    sum += u;
    sum_sq += u * u;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  MonteCarloEstimate out;
  out.value = mx + std::log(mean);
  out.standard_error = std::sqrt(var / n) / mean;
  return out;
}

Matrix random_symmetric(Eigen::Index n, double lo, double hi, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(lo, hi);
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Vector lam(n);
  for (Eigen::Index i = 0; i < n; ++i) lam[i] = uniform(rng);
  Matrix h = q * lam.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

}  // namespace sgdvi::oracle
