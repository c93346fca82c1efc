#pragma once

#include <memory>
#include <vector>

#include "sgdvi/objective.hpp"

namespace sgdvi {

/// L(theta) = 1/2 (theta - mu)^T A (theta - mu) with A symmetric. Data-free;
/// its Hessian is A everywhere, which makes it the reference model for the
/// affine-Gaussian oracles.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix a, Vector mu);

  ObjectiveKind kind() const override { return ObjectiveKind::quadratic; }
  std::size_t dimension() const override { return static_cast<std::size_t>(mu_.size()); }
  std::size_t data_size() const override { return 1; }

  const Matrix& a() const { return a_; }
  const Vector& mu() const { return mu_; }

 protected:
  double eval(const ParamVector& theta, const BatchSelector& batch, ParamVector* grad) const override;
  ParamVector eval_hvp(const ParamVector& theta, const ParamVector& v,
                       const BatchSelector& batch) const override;
  Vector eval_pointwise(const ParamVector& theta) const override;

 private:
  Matrix a_;
  Vector mu_;
};

/// Linear-Gaussian likelihood y_i ~ N(x_i^T w, noise_sigma^2), no bias term.
/// Conjugate with the isotropic Gaussian prior, so its evidence is closed-form.
class BayesLinearRegression final : public Objective {
 public:
  BayesLinearRegression(std::shared_ptr<const Dataset> data, double noise_sigma);

  ObjectiveKind kind() const override { return ObjectiveKind::bayes_linear_regression; }
  std::size_t dimension() const override { return data_->num_features(); }
  std::size_t data_size() const override { return data_->size(); }
  std::unique_ptr<Objective> rebind(std::shared_ptr<const Dataset> data) const override;

  const Dataset& data() const { return *data_; }
  double noise_sigma() const { return noise_sigma_; }

 protected:
  double eval(const ParamVector& theta, const BatchSelector& batch, ParamVector* grad) const override;
  ParamVector eval_hvp(const ParamVector& theta, const ParamVector& v,
                       const BatchSelector& batch) const override;
  Vector eval_pointwise(const ParamVector& theta) const override;

 private:
  std::shared_ptr<const Dataset> data_;
  double noise_sigma_;
};

enum class Activation { tanh, sigmoid };

struct MlpConfig {
  std::size_t hidden = 10;
  Activation activation = Activation::tanh;
  /// Output noise for the Gaussian regression head; unused for softmax.
  double noise_sigma = 1.0;
};

/// Parameter layout of a one-hidden-layer network, packed as
/// [W1 (H x F, column-major), b1 (H), W2 (O x H, column-major), b2 (O)].
struct MlpShape {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;

  std::size_t dimension() const { return hidden * inputs + hidden + outputs * hidden + outputs; }
};

/// One-hidden-layer perceptron with either a Gaussian (regression) or a
/// softmax cross-entropy (classification) head. HVPs use the forward/reverse
/// R-operator, so a product costs a small constant number of passes.
class MlpObjective final : public Objective {
 public:
  MlpObjective(std::shared_ptr<const Dataset> data, MlpConfig config);

  ObjectiveKind kind() const override;
  std::size_t dimension() const override { return shape_.dimension(); }
  std::size_t data_size() const override { return data_->size(); }
  std::unique_ptr<Objective> rebind(std::shared_ptr<const Dataset> data) const override;

  const MlpShape& shape() const { return shape_; }
  const MlpConfig& config() const { return config_; }
  const Dataset& data() const { return *data_; }

  /// Network outputs (O x m) for the rows in `batch`: means for regression,
  /// logits for classification.
  Matrix predict(const ParamVector& theta, const BatchSelector& batch) const;

 protected:
  double eval(const ParamVector& theta, const BatchSelector& batch, ParamVector* grad) const override;
  ParamVector eval_hvp(const ParamVector& theta, const ParamVector& v,
                       const BatchSelector& batch) const override;
  Vector eval_pointwise(const ParamVector& theta) const override;

 private:
  std::shared_ptr<const Dataset> data_;
  MlpConfig config_;
  MlpShape shape_;
  bool classification_;
};

std::unique_ptr<MlpObjective> make_mlp_regression(std::shared_ptr<const Dataset> data,
                                                  MlpConfig config);
std::unique_ptr<MlpObjective> make_mlp_classification(std::shared_ptr<const Dataset> data,
                                                      MlpConfig config);

struct MixtureComponent {
  double weight = 1.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
};

/// Negative log density of a 2D Gaussian mixture; the illustrative
/// non-Gaussian posterior for particle-cloud runs.
class GaussianMixture2D final : public Objective {
 public:
  explicit GaussianMixture2D(std::vector<MixtureComponent> components);

  /// Two well-separated anisotropic components.
  static GaussianMixture2D default_posterior();

  ObjectiveKind kind() const override { return ObjectiveKind::gaussian_mixture_2d; }
  std::size_t dimension() const override { return 2; }
  std::size_t data_size() const override { return 1; }

  const std::vector<MixtureComponent>& components() const { return components_; }

 protected:
  double eval(const ParamVector& theta, const BatchSelector& batch, ParamVector* grad) const override;
  ParamVector eval_hvp(const ParamVector& theta, const ParamVector& v,
                       const BatchSelector& batch) const override;
  Vector eval_pointwise(const ParamVector& theta) const override;

 private:
  struct Prepared {
    double log_norm;  // log weight - log(2 pi) - 1/2 log|C|
    Eigen::Vector2d mean;
    Eigen::Matrix2d precision;
  };
  std::vector<MixtureComponent> components_;
  std::vector<Prepared> prepared_;
};

}  // namespace sgdvi
