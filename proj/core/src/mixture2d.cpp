#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sgdvi/errors.hpp"
#include "sgdvi/models.hpp"

namespace sgdvi {

GaussianMixture2D::GaussianMixture2D(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw ConfigError("mixture weights must be positive");
    total += c.weight;
  }
  for (const auto& c : components_) {
    const double det = c.covariance.determinant();
    if (!(det > 0.0) || std::abs(c.covariance(0, 1) - c.covariance(1, 0)) > 1e-12)
      throw ConfigError("mixture covariance must be symmetric positive definite");
    prepared_.push_back({std::log(c.weight / total) - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det),
                         c.mean, c.covariance.inverse()});
  }
}

GaussianMixture2D GaussianMixture2D::default_posterior() {
  MixtureComponent a;
  a.weight = 0.5;
  a.mean = {-1.5, 0.8};
  a.covariance << 0.6, 0.35, 0.35, 0.4;
  MixtureComponent b;
  b.weight = 0.5;
  b.mean = {1.4, -0.6};
  b.covariance << 0.3, -0.15, -0.15, 0.7;
  return GaussianMixture2D({a, b});
}

double GaussianMixture2D::eval(const ParamVector& theta, const BatchSelector&,
                               ParamVector* grad) const {
  const Eigen::Vector2d x(theta[0], theta[1]);
  std::vector<double> logs;
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& c : prepared_) {
    const Eigen::Vector2d r = x - c.mean;
    logs.push_back(c.log_norm - 0.5 * r.dot(c.precision * r));
    mx = std::max(mx, logs.back());
  }
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - mx);
  const double log_p = mx + std::log(sum);
  if (grad) {
    Eigen::Vector2d score = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k < prepared_.size(); ++k) {
      const double resp = std::exp(logs[k] - log_p);
      score += resp * (-(prepared_[k].precision * (x - prepared_[k].mean)));
    }
    (*grad)[0] = -score[0];
    (*grad)[1] = -score[1];
  }
  return -log_p;
}

ParamVector GaussianMixture2D::eval_hvp(const ParamVector& theta, const ParamVector& v,
                                        const BatchSelector&) const {
  // -d2 log p = sum_k r_k (P_k - s_k s_k^T) + s s^T, with s_k the component
  // scores and s = sum_k r_k s_k.
  const Eigen::Vector2d x(theta[0], theta[1]);
  std::vector<double> logs;
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& c : prepared_) {
    const Eigen::Vector2d r = x - c.mean;
    logs.push_back(c.log_norm - 0.5 * r.dot(c.precision * r));
    mx = std::max(mx, logs.back());
  }
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - mx);
  const double log_p = mx + std::log(sum);
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  Eigen::Vector2d score = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < prepared_.size(); ++k) {
    const double resp = std::exp(logs[k] - log_p);
    const Eigen::Vector2d sk = -(prepared_[k].precision * (x - prepared_[k].mean));
    h += resp * (prepared_[k].precision - sk * sk.transpose());
    score += resp * sk;
  }
  h += score * score.transpose();
  const Eigen::Vector2d out = h * Eigen::Vector2d(v[0], v[1]);
  return ParamVector{{out[0], out[1]}};
}

Vector GaussianMixture2D::eval_pointwise(const ParamVector& theta) const {
  Vector out(1);
  out[0] = -eval(theta, BatchSelector{}, nullptr);
  return out;
}

}  // namespace sgdvi
