#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "sgdvi/dataset.hpp"
#include "sgdvi/types.hpp"

namespace sgdvi {

enum class ObjectiveKind {
  quadratic,
  bayes_linear_regression,
  mlp_regression,
  mlp_classification,
  gaussian_mixture_2d,
};

std::string_view to_string(ObjectiveKind kind);

/// A minibatch of data rows. `scale` multiplies per-row sums so that batch
/// quantities are unbiased estimates of full-data quantities (N / m).
struct BatchSelector {
  std::vector<std::size_t> indices;
  double scale = 1.0;
  std::size_t epoch_position = 0;

  /// All rows 0..n-1 with unit scale.
  static BatchSelector full(std::size_t n);
  std::size_t size() const { return indices.size(); }
};

/// Negative log-likelihood L(theta, batch) with analytic gradient and
/// Hessian-vector product. The prior is deliberately not part of the
/// objective; see GaussianPrior in bound.hpp.
///
/// Objectives are immutable after construction and may be shared across
/// threads for read-only use.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual ObjectiveKind kind() const = 0;
  virtual std::size_t dimension() const = 0;
  /// Number of data rows a batch may index. Data-free objectives report 1.
  virtual std::size_t data_size() const = 0;

  double value(const ParamVector& theta, const BatchSelector& batch) const;
  ParamVector gradient(const ParamVector& theta, const BatchSelector& batch) const;
  /// Value and gradient from one forward/backward pass.
  double value_and_gradient(const ParamVector& theta, const BatchSelector& batch,
                            ParamVector& grad) const;
  ParamVector hessian_vector_product(const ParamVector& theta, const ParamVector& v,
                                     const BatchSelector& batch) const;
  /// Per-row log-likelihood over the full bound dataset.
  Vector pointwise_log_likelihood(const ParamVector& theta) const;

  /// Same model structure over another dataset (e.g. a held-out split).
  virtual std::unique_ptr<Objective> rebind(std::shared_ptr<const Dataset> data) const;

  BatchSelector full_batch() const { return BatchSelector::full(data_size()); }

 protected:
  virtual double eval(const ParamVector& theta, const BatchSelector& batch,
                      ParamVector* grad) const = 0;
  virtual ParamVector eval_hvp(const ParamVector& theta, const ParamVector& v,
                               const BatchSelector& batch) const = 0;
  virtual Vector eval_pointwise(const ParamVector& theta) const = 0;

 private:
  void check_theta(const ParamVector& theta) const;
  void check_batch(const BatchSelector& batch) const;
};

/// Default cap on D for dense Hessian assembly.
inline constexpr std::size_t kDenseHessianCap = 2000;

/// Symmetric D x D Hessian assembled column by column from D HVP calls.
/// Throws ConfigError when D exceeds `cap`.
Matrix dense_hessian(const Objective& objective, const ParamVector& theta,
                     const BatchSelector& batch, std::size_t cap = kDenseHessianCap);

}  // namespace sgdvi
