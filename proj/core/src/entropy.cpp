#include "sgdvi/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sgdvi/errors.hpp"

namespace sgdvi {
namespace {

// Applies diag(w) after the product when a warp is present.
Vector warped_product(const HvpFn& hvp, const Vector& x, const StepJacobianSpec& spec) {
  if (!spec.warp_weights) return hvp(x);
  return spec.warp_weights->cwiseProduct(hvp(x));
}

void check_warp(const StepJacobianSpec& spec, std::size_t dimension) {
  if (spec.warp_weights && static_cast<std::size_t>(spec.warp_weights->size()) != dimension)
    throw DimensionMismatch("warp weights", dimension,
                            static_cast<std::size_t>(spec.warp_weights->size()));
}

}  // namespace

std::string_view to_string(EstimatorMode mode) {
  return mode == EstimatorMode::exact ? "exact" : "taylor-probe";
}

EntropyDelta exact_logdet_step(const Matrix& hessian, const StepJacobianSpec& spec) {
  if (hessian.rows() != hessian.cols())
    throw DimensionMismatch("Hessian", static_cast<std::size_t>(hessian.rows()),
                            static_cast<std::size_t>(hessian.cols()));
  const auto n = hessian.rows();
  check_warp(spec, static_cast<std::size_t>(n));

  EntropyDelta delta;
  delta.mode = EstimatorMode::exact;
  if (n == 0) return delta;

  Matrix jac = spec.warp_weights ? Matrix(-spec.alpha * (spec.warp_weights->asDiagonal() * hessian))
                                 : Matrix(-spec.alpha * hessian);
  jac.diagonal().array() += 1.0;

  const Eigen::PartialPivLU<Matrix> lu(jac);
  const auto pivots = lu.matrixLU().diagonal();
  const double tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, jac.cwiseAbs().maxCoeff());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = std::abs(pivots[i]);
    if (!(p > tol))
      throw SingularJacobian("step Jacobian I - alpha*H is singular (some alpha*lambda = 1); "
                             "entropy change is -infinity");
    sum += std::log(p);
  }
  delta.value = sum;
  return delta;
}

double taylor_probe_estimate(const HvpFn& hvp, const Vector& r0, const StepJacobianSpec& spec) {
  // With d1 = r1 - r0 and d2 = r2 - r1, -2 r0 + 3 r1 - r2 = 2 d1 - d2. The
  // differenced form avoids cancelling O(|r0|^2) terms and is exactly zero
  // when H = 0.
  const Vector d1 = -spec.alpha * warped_product(hvp, r0, spec);
  const Vector r1 = r0 + d1;
  const Vector d2 = -spec.alpha * warped_product(hvp, r1, spec);
  return r0.dot(2.0 * d1 - d2);
}

EntropyDelta taylor_logdet_lower_bound(const HvpFn& hvp, std::size_t dimension,
                                       const StepJacobianSpec& spec, Rng& rng, int probes,
                                       int regime_check_iters) {
  if (probes < 1) throw ConfigError("probes_per_step must be >= 1");
  check_warp(spec, dimension);
  EntropyDelta delta;
  delta.mode = EstimatorMode::taylor_probe;
  delta.probes_used = probes;
  double sum = 0.0;
  for (int k = 0; k < probes; ++k) {
    const Vector r0 = standard_normal(static_cast<Eigen::Index>(dimension), rng);
    sum += taylor_probe_estimate(hvp, r0, spec);
  }
  delta.value = sum / probes;
  if (regime_check_iters > 0) {
    const HvpFn op = [&](const Vector& x) { return warped_product(hvp, x, spec); };
    const double lam = lambda_max_estimate(op, dimension, regime_check_iters);
    delta.regime_checked = true;
    delta.valid = spec.alpha * lam < kTaylorBoundLimit;
  }
  return delta;
}

EntropyDelta taylor_logdet_lower_bound(const Objective& objective, const ParamVector& theta,
                                       const BatchSelector& batch, const StepJacobianSpec& spec,
                                       Rng& rng, int probes, int regime_check_iters) {
  return taylor_logdet_lower_bound(bind_hvp(objective, theta, batch), objective.dimension(), spec,
                                   rng, probes, regime_check_iters);
}

bool taylor_bound_direction_check(const Matrix& hessian, double alpha) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian, Eigen::EigenvaluesOnly);
  const Vector& lam = eig.eigenvalues();
  const double trace = hessian.trace();
  const double trace_sq = (hessian * hessian).trace();
  const double taylor = -alpha * trace - alpha * alpha * trace_sq;
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) logdet += std::log(std::abs(1.0 - alpha * lam[i]));
  return taylor <= logdet;
}

double lambda_max_estimate(const HvpFn& hvp, std::size_t dimension, int iters,
                           std::uint64_t seed) {
  if (iters < 1) throw ConfigError("power iteration needs iters >= 1");
  if (dimension == 0) return 0.0;
  Rng rng(seed);
  Vector v = standard_normal(static_cast<Eigen::Index>(dimension), rng);
  v.normalize();
  double norm = 0.0;
  for (int k = 0; k < iters; ++k) {
    const Vector w = hvp(v);
    norm = w.norm();
    if (!(norm > 0.0)) return 0.0;
    v = w / norm;
  }
  return norm;
}

double lambda_max_estimate(const Objective& objective, const ParamVector& theta,
                           const BatchSelector& batch, int iters) {
  return lambda_max_estimate(bind_hvp(objective, theta, batch), objective.dimension(), iters);
}

HvpFn bind_hvp(const Objective& objective, const ParamVector& theta, const BatchSelector& batch) {
  return [&objective, &theta, &batch](const Vector& v) {
    return objective.hessian_vector_product(theta, v, batch);
  };
}

}  // namespace sgdvi
