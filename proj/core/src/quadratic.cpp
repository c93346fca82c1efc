#include <algorithm>

#include "sgdvi/errors.hpp"
#include "sgdvi/models.hpp"

namespace sgdvi {

QuadraticObjective::QuadraticObjective(Matrix a, Vector mu) : a_(std::move(a)), mu_(std::move(mu)) {
  if (a_.rows() != a_.cols() || a_.rows() != mu_.size())
    throw DimensionMismatch("quadratic objective matrix", static_cast<std::size_t>(mu_.size()),
                            static_cast<std::size_t>(a_.rows()));
  if (a_.size() > 0 &&
      (a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a_.cwiseAbs().maxCoeff()))
    throw ConfigError("quadratic objective matrix must be symmetric");
}

double QuadraticObjective::eval(const ParamVector& theta, const BatchSelector&,
                                ParamVector* grad) const {
  const Vector r = theta - mu_;
  const Vector ar = a_ * r;
  if (grad) *grad = ar;
  return 0.5 * r.dot(ar);
}

ParamVector QuadraticObjective::eval_hvp(const ParamVector&, const ParamVector& v,
                                         const BatchSelector&) const {
  return a_ * v;
}

Vector QuadraticObjective::eval_pointwise(const ParamVector& theta) const {
  Vector out(1);
  out[0] = -eval(theta, BatchSelector{}, nullptr);
  return out;
}

}  // namespace sgdvi
