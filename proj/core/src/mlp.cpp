#include <cmath>
#include <numbers>

#include "sgdvi/errors.hpp"
#include "sgdvi/models.hpp"

namespace sgdvi {
namespace {

using ConstMatMap = Eigen::Map<const Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using MatMap = Eigen::Map<Matrix>;
using VecMap = Eigen::Map<Vector>;

template <class M, class V>
struct Blocks {
  M w1;
  V b1;
  M w2;
  V b2;
};

template <class M, class V, class Ptr>
Blocks<M, V> split_blocks(Ptr data, const MlpShape& s) {
  const auto f = static_cast<Eigen::Index>(s.inputs);
  const auto h = static_cast<Eigen::Index>(s.hidden);
  const auto o = static_cast<Eigen::Index>(s.outputs);
  Ptr p = data;
  M w1(p, h, f);
  p += h * f;
  V b1(p, h);
  p += h;
  M w2(p, o, h);
  p += o * h;
  V b2(p, o);
  return {w1, b1, w2, b2};
}

auto const_blocks(const ParamVector& theta, const MlpShape& s) {
  return split_blocks<ConstMatMap, ConstVecMap>(theta.data(), s);
}

auto mut_blocks(ParamVector& theta, const MlpShape& s) {
  return split_blocks<MatMap, VecMap>(theta.data(), s);
}

struct ForwardPass {
  Matrix x;   // F x m
  Matrix a;   // H x m pre-activations
  Matrix h;   // H x m activations
  Matrix d1;  // phi'(a)
  Matrix z;   // O x m outputs
};

// Loss terms per column plus first and second derivative helpers.
struct Head {
  Vector loss;  // length m, unscaled
  Matrix dz;    // O x m, unscaled
  Matrix p;     // softmax probabilities (classification only)
};

Matrix gather_inputs(const Dataset& data, const BatchSelector& batch) {
  Matrix x(data.features.cols(), static_cast<Eigen::Index>(batch.indices.size()));
  for (std::size_t i = 0; i < batch.indices.size(); ++i)
    x.col(static_cast<Eigen::Index>(i)) =
        data.features.row(static_cast<Eigen::Index>(batch.indices[i])).transpose();
  return x;
}

ForwardPass forward(const ParamVector& theta, const MlpShape& shape, Activation act, Matrix x) {
  const auto p = const_blocks(theta, shape);
  ForwardPass fw;
  fw.x = std::move(x);
  fw.a.noalias() = p.w1 * fw.x;
  fw.a.colwise() += p.b1;
  if (act == Activation::tanh) {
    // Vectorized exp instead of scalar tanh; saturates cleanly to +-1.
    fw.h = 1.0 - 2.0 / ((2.0 * fw.a.array()).exp() + 1.0);
    fw.d1 = 1.0 - fw.h.array().square();
  } else {
    fw.h = (1.0 + (-fw.a.array()).exp()).inverse();
    fw.d1 = fw.h.array() * (1.0 - fw.h.array());
  }
  fw.z.noalias() = p.w2 * fw.h;
  fw.z.colwise() += p.b2;
  return fw;
}

Matrix second_derivative(const ForwardPass& fw, Activation act) {
  if (act == Activation::tanh) return (-2.0 * fw.h.array() * fw.d1.array()).matrix();
  return (fw.d1.array() * (1.0 - 2.0 * fw.h.array())).matrix();
}

Head gaussian_head(const Matrix& z, const Matrix& y, double sigma) {
  const double var = sigma * sigma;
  const double log_norm = 0.5 * static_cast<double>(z.rows()) * std::log(2.0 * std::numbers::pi * var);
  Head out;
  out.dz = (z - y) / var;
  out.loss = (0.5 * (z - y).colwise().squaredNorm().array() / var + log_norm).matrix().transpose();
  return out;
}

Head softmax_head(const Matrix& z, const std::vector<int>& labels) {
  Head out;
  const auto m = z.cols();
  out.p.resize(z.rows(), m);
  out.loss.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double zmax = z.col(j).maxCoeff();
    const auto e = (z.col(j).array() - zmax).exp();
    const double sum = e.sum();
    out.p.col(j) = e / sum;
    out.loss[j] = zmax + std::log(sum) - z(labels[static_cast<std::size_t>(j)], j);
  }
  out.dz = out.p;
  for (Eigen::Index j = 0; j < m; ++j) out.dz(labels[static_cast<std::size_t>(j)], j) -= 1.0;
  return out;
}

}  // namespace

MlpObjective::MlpObjective(std::shared_ptr<const Dataset> data, MlpConfig config)
    : data_(std::move(data)), config_(config) {
  if (!data_) throw ConfigError("MLP objective needs a dataset");
  if (config_.hidden < 1) throw ConfigError("MLP needs at least one hidden unit");
  classification_ = data_->task == TaskKind::classification;
  if (!classification_ && !(config_.noise_sigma > 0.0))
    throw ConfigError("noise_sigma must be positive");
  if (classification_ && data_->num_classes < 2)
    throw ConfigError("classification needs at least two classes");
  shape_ = MlpShape{data_->num_features(), config_.hidden, data_->num_outputs()};
}

ObjectiveKind MlpObjective::kind() const {
  return classification_ ? ObjectiveKind::mlp_classification : ObjectiveKind::mlp_regression;
}

std::unique_ptr<Objective> MlpObjective::rebind(std::shared_ptr<const Dataset> data) const {
  auto out = std::make_unique<MlpObjective>(std::move(data), config_);
  if (out->shape_.dimension() != shape_.dimension())
    throw DimensionMismatch("rebound MLP", shape_.dimension(), out->shape_.dimension());
  return out;
}

Matrix MlpObjective::predict(const ParamVector& theta, const BatchSelector& batch) const {
  return forward(theta, shape_, config_.activation, gather_inputs(*data_, batch)).z;
}

namespace {

Matrix gather_targets(const Dataset& data, const BatchSelector& batch) {
  Matrix y(data.targets.cols(), static_cast<Eigen::Index>(batch.indices.size()));
  for (std::size_t i = 0; i < batch.indices.size(); ++i)
    y.col(static_cast<Eigen::Index>(i)) =
        data.targets.row(static_cast<Eigen::Index>(batch.indices[i])).transpose();
  return y;
}

std::vector<int> gather_labels(const Dataset& data, const BatchSelector& batch) {
  std::vector<int> out(batch.indices.size());
  for (std::size_t i = 0; i < batch.indices.size(); ++i) out[i] = data.labels[batch.indices[i]];
  return out;
}

}  // namespace

double MlpObjective::eval(const ParamVector& theta, const BatchSelector& batch,
                          ParamVector* grad) const {
  if (batch.indices.empty()) return 0.0;
  const ForwardPass fw = forward(theta, shape_, config_.activation, gather_inputs(*data_, batch));
  const Head head = classification_ ? softmax_head(fw.z, gather_labels(*data_, batch))
                                    : gaussian_head(fw.z, gather_targets(*data_, batch),
                                                    config_.noise_sigma);
  if (grad) {
    const auto p = const_blocks(theta, shape_);
    auto g = mut_blocks(*grad, shape_);
    const Matrix dz = batch.scale * head.dz;
    g.w2.noalias() = dz * fw.h.transpose();
    g.b2 = dz.rowwise().sum();
    const Matrix da = (p.w2.transpose() * dz).cwiseProduct(fw.d1);
    g.w1.noalias() = da * fw.x.transpose();
    g.b1 = da.rowwise().sum();
  }
  return batch.scale * head.loss.sum();
}

ParamVector MlpObjective::eval_hvp(const ParamVector& theta, const ParamVector& v,
                                   const BatchSelector& batch) const {
  ParamVector out = ParamVector::Zero(theta.size());
  if (batch.indices.empty()) return out;
  const ForwardPass fw = forward(theta, shape_, config_.activation, gather_inputs(*data_, batch));
  const Head head = classification_ ? softmax_head(fw.z, gather_labels(*data_, batch))
                                    : gaussian_head(fw.z, gather_targets(*data_, batch),
                                                    config_.noise_sigma);
  const auto p = const_blocks(theta, shape_);
  const auto dir = const_blocks(v, shape_);

  // Forward R-pass: directional derivatives of the activations.
  Matrix ra = dir.w1 * fw.x;
  ra.colwise() += dir.b1;
  const Matrix rh = fw.d1.cwiseProduct(ra);
  Matrix rz = p.w2 * rh;
  rz.noalias() += dir.w2 * fw.h;
  rz.colwise() += dir.b2;

  // Directional derivative of dL/dz through the output nonlinearity.
  Matrix rdz;
  if (classification_) {
    const Matrix prz = head.p.cwiseProduct(rz);
    rdz = prz - head.p * prz.colwise().sum().asDiagonal();
  } else {
    rdz = rz / (config_.noise_sigma * config_.noise_sigma);
  }

  // Reverse R-pass.
  const Matrix dh = p.w2.transpose() * head.dz;
  Matrix rdh = dir.w2.transpose() * head.dz;
  rdh.noalias() += p.w2.transpose() * rdz;
  const Matrix d2 = second_derivative(fw, config_.activation);
  const Matrix rda = rdh.cwiseProduct(fw.d1) + dh.cwiseProduct(d2).cwiseProduct(ra);

  auto hv = mut_blocks(out, shape_);
  hv.w2.noalias() = rdz * fw.h.transpose();
  hv.w2.noalias() += head.dz * rh.transpose();
  hv.b2 = rdz.rowwise().sum();
  hv.w1.noalias() = rda * fw.x.transpose();
  hv.b1 = rda.rowwise().sum();
  out *= batch.scale;
  return out;
}

Vector MlpObjective::eval_pointwise(const ParamVector& theta) const {
  const BatchSelector all = BatchSelector::full(data_->size());
  if (all.indices.empty()) return Vector(0);
  const ForwardPass fw = forward(theta, shape_, config_.activation, gather_inputs(*data_, all));
  const Head head = classification_ ? softmax_head(fw.z, data_->labels)
                                    : gaussian_head(fw.z, data_->targets.transpose(),
                                                    config_.noise_sigma);
  return -head.loss;
}

std::unique_ptr<MlpObjective> make_mlp_regression(std::shared_ptr<const Dataset> data,
                                                  MlpConfig config) {
  if (data && data->task != TaskKind::regression)
    throw ConfigError("mlp-regression needs a regression dataset");
  return std::make_unique<MlpObjective>(std::move(data), config);
}

std::unique_ptr<MlpObjective> make_mlp_classification(std::shared_ptr<const Dataset> data,
                                                       MlpConfig config) {
  if (data && data->task != TaskKind::classification)
    throw ConfigError("mlp-classification needs a labelled dataset");
  return std::make_unique<MlpObjective>(std::move(data), config);
}

}  // namespace sgdvi
