#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sgdvi/curve_file.hpp"
#include "sgdvi/experiment_spec.hpp"

namespace sgdvi {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Library version written into every output header.
std::string code_version();

struct Problem {
  std::shared_ptr<const Dataset> train;
  /// Null when the spec keeps every row for training.
  std::shared_ptr<const Dataset> test;
  std::unique_ptr<Objective> objective;
  std::unique_ptr<Objective> test_objective;
};

/// Loads or generates the data, splits it, and builds the objective.
/// Throws ConfigError, ParseError or UnsupportedModel.
Problem build_problem(const ExperimentSpec& spec);

struct CommandResult {
  int exit_code = kExitOk;
  /// Summary entries in output order; values are JSON text exactly as written
  /// to summary.json.
  std::vector<std::pair<std::string, std::string>> report;
  /// Every file written, in creation order.
  std::vector<std::filesystem::path> files;
  std::vector<std::string> failures;
};

/// Curve columns: t, train_loss, test_loglik, energy, entropy, bound,
/// bound_bits, energy_full. Files: train/seed_<seed_init + r>.csv per repeat,
/// summary.json, config.json.
CommandResult cmd_train(const ExperimentSpec& spec, std::ostream& log);

/// One row per grid value in sweep.csv, plus per-run curves under
/// sweep/point_<i>/. Every grid value uses the same seeds. Point curves echo
/// the equivalent train-curve spec, so `train` on that echo reproduces them.
CommandResult cmd_sweep(const ExperimentSpec& spec, std::ostream& log);

/// Particle clouds for g0 = 0 (particles/plain) and g0 = particles.g0
/// (particles/warped): snapshot_<t>.csv with one row per particle, and
/// cloud.csv with the cloud moments per snapshot.
CommandResult cmd_particles2d(const ExperimentSpec& spec, std::ostream& log);

/// Runs the reference comparisons and writes oracle_check.json. Exit code 1
/// when any check fails.
CommandResult cmd_oracle_check(const ExperimentSpec& spec, std::ostream& log);

/// K independent members (seed_init + k); ensemble/member_<k>.csv and the
/// ensemble predictive log-likelihood in summary.json.
CommandResult cmd_ensemble(const ExperimentSpec& spec, std::ostream& log);

/// Dispatches on spec.kind. Configuration problems surface as exit code 2
/// with the message logged, never as exceptions.
CommandResult run_experiment(const ExperimentSpec& spec, std::ostream& log);

/// The curve file written for one training run.
CurveFile trace_curve(const TrainTrace& trace, const ExperimentSpec& spec, std::size_t repeat);

/// First iteration maximizing the bound among full-batch records, and the
/// first maximizing the test log-likelihood (npos without test data).
struct PeakIterations {
  std::size_t bound = 0;
  std::size_t test = static_cast<std::size_t>(-1);
};
PeakIterations find_peaks(const CurveFile& curve);

}  // namespace sgdvi
