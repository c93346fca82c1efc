#include <cmath>
#include <numbers>

#include "sgdvi/errors.hpp"
#include "sgdvi/models.hpp"

namespace sgdvi {
namespace {

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

BayesLinearRegression::BayesLinearRegression(std::shared_ptr<const Dataset> data,
                                             double noise_sigma)
    : data_(std::move(data)), noise_sigma_(noise_sigma) {
  if (!data_) throw ConfigError("bayes-linear-regression needs a dataset");
  if (data_->task != TaskKind::regression || (data_->size() > 0 && data_->targets.cols() != 1))
    throw ConfigError("bayes-linear-regression needs a single-target regression dataset");
  if (!(noise_sigma_ > 0.0)) throw ConfigError("noise_sigma must be positive");
}

std::unique_ptr<Objective> BayesLinearRegression::rebind(std::shared_ptr<const Dataset> data) const {
  return std::make_unique<BayesLinearRegression>(std::move(data), noise_sigma_);
}

double BayesLinearRegression::eval(const ParamVector& theta, const BatchSelector& batch,
                                   ParamVector* grad) const {
  if (batch.indices.empty()) return 0.0;
  const Matrix x = gather_rows(data_->features, batch.indices);
  const Vector y = gather_rows(data_->targets, batch.indices).col(0);
  const Vector resid = y - x * theta;
  const double var = noise_sigma_ * noise_sigma_;
  const double m = static_cast<double>(batch.indices.size());
  if (grad) *grad = -(batch.scale / var) * (x.transpose() * resid);
  return batch.scale *
         (0.5 * resid.squaredNorm() / var + 0.5 * m * std::log(2.0 * std::numbers::pi * var));
}

ParamVector BayesLinearRegression::eval_hvp(const ParamVector&, const ParamVector& v,
                                            const BatchSelector& batch) const {
  if (batch.indices.empty()) return ParamVector::Zero(v.size());
  const Matrix x = gather_rows(data_->features, batch.indices);
  return (batch.scale / (noise_sigma_ * noise_sigma_)) * (x.transpose() * (x * v));
}

Vector BayesLinearRegression::eval_pointwise(const ParamVector& theta) const {
  if (data_->size() == 0) return Vector(0);
  const double var = noise_sigma_ * noise_sigma_;
  const Vector resid = data_->targets.col(0) - data_->features * theta;
  return (-0.5 * resid.array().square() / var - 0.5 * std::log(2.0 * std::numbers::pi * var)).matrix();
}

}  // namespace sgdvi
