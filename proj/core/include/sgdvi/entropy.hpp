#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>

#include "sgdvi/objective.hpp"
#include "sgdvi/types.hpp"

namespace sgdvi {

enum class EstimatorMode { exact, taylor_probe };

std::string_view to_string(EstimatorMode mode);

/// Step size and optional per-coordinate warp w of the step Jacobian
/// I - alpha * diag(w) * H. An absent warp means w = 1.
struct StepJacobianSpec {
  double alpha = 0.0;
  std::optional<Vector> warp_weights;
};

/// Per-step entropy change log|J(theta_t)| in nats.
struct EntropyDelta {
  double value = 0.0;
  EstimatorMode mode = EstimatorMode::exact;
  int probes_used = 0;
  /// False when the spectral check found alpha * lambda_max >= 0.68, where the
  /// quadratic Taylor bound may point the wrong way.
  bool valid = true;
  /// Whether the spectral check was run at all.
  bool regime_checked = false;
};

/// y = H x for some symmetric H.
using HvpFn = std::function<Vector(const Vector&)>;

/// Largest alpha * lambda for which the quadratic Taylor bound of
/// log(1 - x) is known to hold.
inline constexpr double kTaylorBoundLimit = 0.68;

/// log|det(I - alpha diag(w) H)| through a partially pivoted LU factorization.
/// Throws SingularJacobian when a pivot vanishes (alpha * lambda_i = 1).
EntropyDelta exact_logdet_step(const Matrix& hessian, const StepJacobianSpec& spec);

/// Single-probe Taylor estimate for a fixed probe r0:
///   r1 = r0 - alpha W H r0,  r2 = r1 - alpha W H r1,
///   return r0^T (-2 r0 + 3 r1 - r2)  (= -alpha r0'WHr0 - alpha^2 r0'(WH)^2 r0).
double taylor_probe_estimate(const HvpFn& hvp, const Vector& r0, const StepJacobianSpec& spec);

/// Unbiased estimate of -alpha tr(WH) - alpha^2 tr((WH)^2), averaging `probes`
/// standard-normal probes drawn from `rng`. When `regime_check_iters` > 0 a
/// power iteration sets EntropyDelta::valid.
EntropyDelta taylor_logdet_lower_bound(const HvpFn& hvp, std::size_t dimension,
                                       const StepJacobianSpec& spec, Rng& rng, int probes = 1,
                                       int regime_check_iters = 0);

EntropyDelta taylor_logdet_lower_bound(const Objective& objective, const ParamVector& theta,
                                       const BatchSelector& batch, const StepJacobianSpec& spec,
                                       Rng& rng, int probes = 1, int regime_check_iters = 0);

/// True iff -alpha tr(H) - alpha^2 tr(H^2) <= log|I - alpha H|, evaluated
/// through a symmetric eigendecomposition. Test-scale only.
bool taylor_bound_direction_check(const Matrix& hessian, double alpha);

/// Power-iteration estimate of max_i |lambda_i| of the operator. Starts from a
/// fixed-seed random vector so repeated calls agree bit for bit.
double lambda_max_estimate(const HvpFn& hvp, std::size_t dimension, int iters,
                           std::uint64_t seed = 0x5eed);

double lambda_max_estimate(const Objective& objective, const ParamVector& theta,
                           const BatchSelector& batch, int iters);

/// Binds an objective's HVP at (theta, batch) into an HvpFn.
HvpFn bind_hvp(const Objective& objective, const ParamVector& theta, const BatchSelector& batch);

}  // namespace sgdvi
