#include "sgdvi/objective.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "sgdvi/errors.hpp"

namespace sgdvi {

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::quadratic: return "quadratic";
    case ObjectiveKind::bayes_linear_regression: return "bayes-linear-regression";
    case ObjectiveKind::mlp_regression: return "mlp-regression";
    case ObjectiveKind::mlp_classification: return "mlp-classification";
    case ObjectiveKind::gaussian_mixture_2d: return "gaussian-mixture-2d";
  }
  return "unknown";
}

BatchSelector BatchSelector::full(std::size_t n) {
  BatchSelector b;
  b.indices.resize(n);
  std::iota(b.indices.begin(), b.indices.end(), std::size_t{0});
  b.scale = 1.0;
  return b;
}

void Objective::check_theta(const ParamVector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dimension())
    throw DimensionMismatch(std::string(to_string(kind())) + " parameters", dimension(),
                            static_cast<std::size_t>(theta.size()));
}

void Objective::check_batch(const BatchSelector& batch) const {
  const std::size_t n = data_size();
  for (auto i : batch.indices)
    if (i >= n)
      throw Error("batch index " + std::to_string(i) + " out of range for " +
                  std::to_string(n) + " data rows");
}

double Objective::value(const ParamVector& theta, const BatchSelector& batch) const {
  check_theta(theta);
  check_batch(batch);
  const double v = eval(theta, batch, nullptr);
  if (!std::isfinite(v)) throw DivergenceError("non-finite objective value");
  return v;
}

ParamVector Objective::gradient(const ParamVector& theta, const BatchSelector& batch) const {
  ParamVector g;
  value_and_gradient(theta, batch, g);
  return g;
}

double Objective::value_and_gradient(const ParamVector& theta, const BatchSelector& batch,
                                     ParamVector& grad) const {
  check_theta(theta);
  check_batch(batch);
  grad.setZero(static_cast<Eigen::Index>(dimension()));
  const double v = eval(theta, batch, &grad);
  if (!std::isfinite(v)) throw DivergenceError("non-finite objective value");
  if (!grad.allFinite()) throw DivergenceError("non-finite gradient");
  return v;
}

ParamVector Objective::hessian_vector_product(const ParamVector& theta, const ParamVector& v,
                                              const BatchSelector& batch) const {
  check_theta(theta);
  if (static_cast<std::size_t>(v.size()) != dimension())
    throw DimensionMismatch("HVP direction", dimension(), static_cast<std::size_t>(v.size()));
  check_batch(batch);
  return eval_hvp(theta, v, batch);
}

Vector Objective::pointwise_log_likelihood(const ParamVector& theta) const {
  check_theta(theta);
  return eval_pointwise(theta);
}

std::unique_ptr<Objective> Objective::rebind(std::shared_ptr<const Dataset>) const {
  throw UnsupportedModel(std::string(to_string(kind())) + " has no dataset to rebind");
}

Matrix dense_hessian(const Objective& objective, const ParamVector& theta,
                     const BatchSelector& batch, std::size_t cap) {
  const std::size_t d = objective.dimension();
  if (d > cap)
    throw ConfigError("dense Hessian requested for D = " + std::to_string(d) +
                      " above cap " + std::to_string(cap));
  const auto n = static_cast<Eigen::Index>(d);
  Matrix h(n, n);
  ParamVector e = ParamVector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    h.col(j) = objective.hessian_vector_product(theta, e, batch);
    e[j] = 0.0;
  }
  return h;
}

}  // namespace sgdvi
