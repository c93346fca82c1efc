#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sgdvi/entropy.hpp"
#include "sgdvi/objective.hpp"

namespace sgdvi {

enum class BatchMode { fixed_sequence, resampled };

std::string_view to_string(BatchMode mode);

/// Training and estimator hyperparameters for one run.
struct RunConfig {
  double alpha = 0.01;
  /// Initialization scale; also the prior scale unless prior_sigma is set.
  double sigma0 = 1.0;
  std::optional<double> prior_sigma;
  std::size_t iterations = 100;
  /// Gradient threshold of the entropy-friendly warp; 0 is plain SGD.
  double g0 = 0.0;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  BatchMode batch_mode = BatchMode::fixed_sequence;
  EstimatorMode estimator = EstimatorMode::taylor_probe;
  int probes_per_step = 1;
  std::uint64_t seed_init = 0;
  std::uint64_t seed_batch = 1;
  std::uint64_t seed_probe = 2;
  /// Full-batch energy (and test metric) every this many iterations; 0 = only
  /// at t = 0 and t = T. Other records use the minibatch energy.
  std::size_t energy_stride = 1;
  /// Keep a copy of theta every this many iterations and at t = T; 0 keeps none.
  std::size_t snapshot_stride = 0;
  /// Power iterations for the alpha * lambda_max < 1 check at t = 0; 0 disables.
  int safety_power_iters = 30;
  /// Power iterations for the per-step Taylor regime check; 0 disables.
  int regime_check_iters = 0;

  double prior_scale() const { return prior_sigma.value_or(sigma0); }
  std::size_t effective_batch(std::size_t n) const { return batch_size == 0 ? n : batch_size; }
  /// Throws ConfigError when an invariant fails for a dataset of `n` rows.
  void validate(std::size_t n) const;
};

/// Differential entropy of N(0, sigma^2 I_D): D/2 (1 + log 2 pi) + D log sigma.
double gaussian_entropy(std::size_t dimension, double sigma);

/// Running entropy S_t = S_0 + sum of per-step deltas. The full history
/// S_0..S_t is kept so the entropy at any past iteration is exact.
class EntropyLedger {
 public:
  EntropyLedger() = default;
  explicit EntropyLedger(double initial_entropy) : history_{initial_entropy} {}

  void append(const EntropyDelta& delta);

  double initial_entropy() const { return history_.front(); }
  double entropy() const { return history_.back(); }
  /// S_t for 0 <= t <= steps(); throws std::out_of_range otherwise.
  double entropy_at(std::size_t t) const;
  std::size_t steps() const { return deltas_.size(); }
  const std::vector<EntropyDelta>& deltas() const { return deltas_; }

 private:
  std::vector<double> history_{0.0};
  std::vector<EntropyDelta> deltas_;
};

/// theta_0 ~ N(0, sigma0^2 I) from seed_init, and a ledger at the Gaussian entropy.
std::pair<ParamVector, EntropyLedger> initialize(const RunConfig& config, std::size_t dimension);

struct WarpedGradient {
  ParamVector gradient;
  /// Jacobian scaling w_i = 1 - sech^2(g_i / g0) = tanh^2(g_i / g0).
  Vector weights;
};

/// g'_i = g_i - g0 tanh(g_i / g0). g0 = 0 returns (g, 1).
WarpedGradient warp_gradient(const ParamVector& g, double g0);

/// Produces the minibatch sequence of one run. In fixed-sequence mode the
/// order depends on seed_batch only (one shuffle per epoch, consecutive
/// chunks); in resampled mode every batch is an independent draw seeded by
/// (seed_batch, seed_init), so runs see different batches.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, const RunConfig& config);
  BatchSelector next();

 private:
  void reshuffle();

  std::size_t n_;
  std::size_t m_;
  BatchMode mode_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

struct StepOutcome {
  ParamVector theta;
  /// Objective value at the pre-step point on the step's batch.
  double loss = 0.0;
};

/// One step of the entropy-tracking SGD loop: the entropy delta is computed at
/// theta_t first (warped Jacobian when g0 > 0) and appended to the ledger, then
/// theta_{t+1} = theta_t - alpha g'. Throws DivergenceError on non-finite values.
StepOutcome sgd_step(const Objective& objective, const ParamVector& theta,
                     const BatchSelector& batch, const RunConfig& config, EntropyLedger& ledger,
                     Rng& probe_rng);

struct TraceRecord {
  std::size_t t = 0;
  /// Training NLL per data row.
  double train_loss = 0.0;
  /// Mean held-out log-likelihood per row; NaN when not evaluated.
  double test_loglik = 0.0;
  double energy = 0.0;
  bool energy_full = false;
  double entropy = 0.0;
  double bound = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  std::vector<std::pair<std::size_t, ParamVector>> snapshots;
  ParamVector theta_final;
  EntropyLedger ledger;
  std::vector<std::string> warnings;
  /// alpha * |lambda|_max at theta_0 on the first batch; NaN when not checked.
  double alpha_lambda_init = 0.0;
  bool aborted = false;
  std::string error;
};

/// Runs the full loop for config.iterations steps. Records are contiguous
/// t = 0..T (fewer on abort). Errors during training set `aborted` and keep
/// the partial trace.
TrainTrace run_training(const Objective& objective, const RunConfig& config,
                        const Objective* test_objective = nullptr);

struct EnsembleResult {
  std::vector<TrainTrace> traces;
  /// Indices into `traces` of members that aborted.
  std::vector<std::size_t> failed;
  /// Mean over held-out rows of log (1/K sum_k p(y | theta_k)) over the
  /// members that finished; empty without a test objective.
  std::optional<double> ensemble_test_loglik;
};

/// K independent runs with seed_init + k; fixed-sequence batches are shared.
/// Members run on up to `threads` worker threads; output does not depend on it.
EnsembleResult run_ensemble(const Objective& objective, const RunConfig& config, std::size_t members,
                            const Objective* test_objective = nullptr, unsigned threads = 1);

/// Calls fn(i) for i in [0, count) on up to `threads` threads.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace sgdvi
