#include "sgdvi/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sgdvi/bound.hpp"
#include "sgdvi/errors.hpp"

namespace sgdvi {

std::string_view to_string(BatchMode mode) {
  return mode == BatchMode::fixed_sequence ? "fixed-sequence" : "resampled";
}

void RunConfig::validate(std::size_t n) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ConfigError("sigma0 must be positive");
  if (prior_sigma && !(*prior_sigma > 0.0)) throw ConfigError("prior_sigma must be positive");
  if (!(g0 >= 0.0) || !std::isfinite(g0)) throw ConfigError("g0 must be non-negative");
  if (n == 0) throw ConfigError("training needs at least one data row");
  const std::size_t m = effective_batch(n);
  if (m < 1 || m > n)
    throw ConfigError("batch size " + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  if (probes_per_step < 1) throw ConfigError("probes_per_step must be >= 1");
  if (safety_power_iters < 0 || regime_check_iters < 0)
    throw ConfigError("power iteration counts must be non-negative");
}

double gaussian_entropy(std::size_t dimension, double sigma) {
  const double d = static_cast<double>(dimension);
  return 0.5 * d * (1.0 + std::log(2.0 * std::numbers::pi)) + d * std::log(sigma);
}

void EntropyLedger::append(const EntropyDelta& delta) {
  deltas_.push_back(delta);
  history_.push_back(history_.back() + delta.value);
}

double EntropyLedger::entropy_at(std::size_t t) const {
  if (t >= history_.size())
    throw std::out_of_range("entropy ledger has " + std::to_string(deltas_.size()) +
                            " steps, asked for t = " + std::to_string(t));
  return history_[t];
}

std::pair<ParamVector, EntropyLedger> initialize(const RunConfig& config, std::size_t dimension) {
  if (dimension < 1) throw ConfigError("dimension must be >= 1");
  if (!(config.sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
  Rng rng(config.seed_init);
  ParamVector theta = config.sigma0 * standard_normal(static_cast<Eigen::Index>(dimension), rng);
  return {std::move(theta), EntropyLedger(gaussian_entropy(dimension, config.sigma0))};
}

WarpedGradient warp_gradient(const ParamVector& g, double g0) {
  if (g0 < 0.0) throw ConfigError("g0 must be non-negative");
  if (g0 == 0.0) return {g, Vector::Ones(g.size())};
  const Eigen::ArrayXd t = (g.array() / g0).tanh();
  return {(g.array() - g0 * t).matrix(), t.square().matrix()};
}

BatchSchedule::BatchSchedule(std::size_t n, const RunConfig& config)
    : n_(n),
      m_(config.effective_batch(n)),
      mode_(config.batch_mode),
      rng_(config.batch_mode == BatchMode::fixed_sequence
               ? config.seed_batch
               : mix_seed(config.seed_batch, config.seed_init)) {
  if (m_ < 1 || m_ > n_) throw ConfigError("batch size outside [1, N]");
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  cursor_ = n_;  // forces a shuffle on the first call
}

void BatchSchedule::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

BatchSelector BatchSchedule::next() {
  if (m_ == n_) {
    BatchSelector full = BatchSelector::full(n_);
    full.epoch_position = epoch_++;
    return full;
  }
  BatchSelector b;
  if (mode_ == BatchMode::fixed_sequence) {
    if (cursor_ >= n_) {
      reshuffle();
      ++epoch_;
    }
    const std::size_t end = std::min(cursor_ + m_, n_);
    b.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                     order_.begin() + static_cast<std::ptrdiff_t>(end));
    b.epoch_position = cursor_ / m_;
    cursor_ = end;
  } else {
    // Partial Fisher-Yates: an independent uniform m-subset per call.
    for (std::size_t i = 0; i < m_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_ - 1);
      std::swap(order_[i], order_[pick(rng_)]);
    }
    b.indices.assign(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(m_));
    b.epoch_position = epoch_++;
  }
  b.scale = static_cast<double>(n_) / static_cast<double>(b.indices.size());
  return b;
}

namespace {

double try_alpha_lambda(const Objective& objective, const ParamVector& theta,
                        const BatchSelector& batch, double alpha) {
  try {
    return alpha * lambda_max_estimate(objective, theta, batch, 20);
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

[[noreturn]] void diverged(const std::string& what, const Objective& objective,
                           const ParamVector& theta, const BatchSelector& batch, double alpha) {
  const double al = theta.allFinite() ? try_alpha_lambda(objective, theta, batch, alpha)
                                      : std::numeric_limits<double>::quiet_NaN();
  std::ostringstream msg;
  msg << what << " (alpha*lambda_max estimate " << al << ")";
  throw DivergenceError(msg.str(), al);
}

}  // namespace

StepOutcome sgd_step(const Objective& objective, const ParamVector& theta,
                     const BatchSelector& batch, const RunConfig& config, EntropyLedger& ledger,
                     Rng& probe_rng) {
  StepOutcome out;
  ParamVector grad;
  try {
    out.loss = objective.value_and_gradient(theta, batch, grad);
  } catch (const DivergenceError& e) {
    diverged(e.what(), objective, theta, batch, config.alpha);
  }

  StepJacobianSpec spec{config.alpha, std::nullopt};
  if (config.g0 > 0.0) {
    WarpedGradient warped = warp_gradient(grad, config.g0);
    grad = std::move(warped.gradient);
    spec.warp_weights = std::move(warped.weights);
  }

  EntropyDelta delta;
  if (config.estimator == EstimatorMode::exact) {
    delta = exact_logdet_step(dense_hessian(objective, theta, batch), spec);
  } else {
    delta = taylor_logdet_lower_bound(objective, theta, batch, spec, probe_rng,
                                      config.probes_per_step, config.regime_check_iters);
  }
  if (!std::isfinite(delta.value)) diverged("non-finite entropy change", objective, theta, batch, config.alpha);
  ledger.append(delta);

  out.theta = theta - config.alpha * grad;
  if (!out.theta.allFinite()) diverged("non-finite parameters after update", objective, theta, batch, config.alpha);
  return out;
}

TrainTrace run_training(const Objective& objective, const RunConfig& config,
                        const Objective* test_objective) {
  const std::size_t n = objective.data_size();
  config.validate(n);

  TrainTrace trace;
  auto [theta, ledger] = initialize(config, objective.dimension());
  trace.ledger = std::move(ledger);
  trace.alpha_lambda_init = std::numeric_limits<double>::quiet_NaN();

  const GaussianPrior prior{config.prior_scale()};
  const BatchSelector full = objective.full_batch();
  BatchSchedule schedule(n, config);
  Rng probe_rng(mix_seed(config.seed_probe, config.seed_init));
  const std::size_t T = config.iterations;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  try {
    for (std::size_t t = 0; t <= T; ++t) {
      const bool at_stride = config.energy_stride > 0 && t % config.energy_stride == 0;
      const bool full_eval = t == 0 || t == T || at_stride;

      BatchSelector batch = t < T ? schedule.next() : full;
      const bool batch_is_full = batch.indices.size() == n;

      if (t == 0 && config.safety_power_iters > 0) {
        trace.alpha_lambda_init =
            config.alpha * lambda_max_estimate(objective, theta, batch, config.safety_power_iters);
        if (trace.alpha_lambda_init >= 1.0) {
          std::ostringstream msg;
          msg << "step size unsafe at initialization: alpha*lambda_max ~ " << trace.alpha_lambda_init
              << " >= 1";
          trace.warnings.push_back(msg.str());
        }
      }

      TraceRecord rec;
      rec.t = t;
      rec.entropy = trace.ledger.entropy();

      double batch_loss = nan;
      ParamVector next;
      if (t < T) {
        StepOutcome step = sgd_step(objective, theta, batch, config, trace.ledger, probe_rng);
        batch_loss = step.loss;
        next = std::move(step.theta);
      }

      double loss = 0.0;
      if (full_eval || batch_is_full) {
        loss = (t < T && batch_is_full) ? batch_loss : objective.value(theta, full);
        rec.energy_full = true;
      } else {
        loss = batch_loss;
      }
      rec.train_loss = loss / static_cast<double>(n);
      rec.energy = prior.log_density(theta) - loss;
      rec.bound = bound_at(t, trace.ledger, rec.energy).bound;
      rec.test_loglik = nan;
      if (test_objective && (full_eval || batch_is_full))
        rec.test_loglik = test_objective->pointwise_log_likelihood(theta).mean();

      trace.records.push_back(rec);
      if (config.snapshot_stride > 0 && (t % config.snapshot_stride == 0 || t == T))
        trace.snapshots.emplace_back(t, theta);
      if (t < T) theta = std::move(next);
    }
  } catch (const Error& e) {
    trace.aborted = true;
    trace.error = e.what();
  }
  trace.theta_final = std::move(theta);
  return trace;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(threads, count);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

EnsembleResult run_ensemble(const Objective& objective, const RunConfig& config, std::size_t members,
                            const Objective* test_objective, unsigned threads) {
  if (members < 1) throw ConfigError("ensemble needs at least one member");
  config.validate(objective.data_size());
  EnsembleResult result;
  result.traces.resize(members);
  parallel_for(members, threads, [&](std::size_t k) {
    RunConfig member = config;
    member.seed_init = config.seed_init + k;
    result.traces[k] = run_training(objective, member, test_objective);
  });

  std::vector<Vector> member_ll;
  for (std::size_t k = 0; k < members; ++k) {
    if (result.traces[k].aborted) {
      result.failed.push_back(k);
    } else if (test_objective) {
      member_ll.push_back(test_objective->pointwise_log_likelihood(result.traces[k].theta_final));
    }
  }
  if (test_objective && !member_ll.empty()) {
    const auto rows = member_ll.front().size();
    double total = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (const auto& ll : member_ll) mx = std::max(mx, ll[i]);
      double s = 0.0;
      for (const auto& ll : member_ll) s += std::exp(ll[i] - mx);
      total += mx + std::log(s / static_cast<double>(member_ll.size()));
    }
    result.ensemble_test_loglik = rows > 0 ? total / static_cast<double>(rows) : 0.0;
  }
  return result;
}

}  // namespace sgdvi
