#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sgdvi/data_io.hpp"
#include "sgdvi/models.hpp"
#include "sgdvi/optimizer.hpp"

namespace sgdvi {

enum class ExperimentKind { train_curve, sweep, particles_2d, oracle_check, ensemble };

enum class ModelType { quadratic, bayes_linear_regression, mlp, mixture2d };

struct ModelSpec {
  ModelType type = ModelType::mlp;
  std::size_t hidden = 10;
  Activation activation = Activation::tanh;
  /// Gaussian likelihood scale for regression models.
  double noise_sigma = 1.0;
  /// Quadratic objective 1/2 (theta - mu)' A (theta - mu).
  Matrix quadratic_a;
  Vector quadratic_mu;
};

enum class DataSource { none, synthetic, delimited, idx };

struct DataSpec {
  DataSource source = DataSource::none;

  // delimited
  std::string path;
  DelimitedSchema schema;

  // idx
  std::string images;
  std::string labels;
  /// 0 reads every example.
  std::size_t limit = 0;

  // synthetic
  std::uint64_t seed = 0;
  std::size_t n = 100;
  std::size_t features = 1;
  double noise = 0.1;
  SyntheticShape shape = SyntheticShape::linear;

  /// Fraction of rows used for training; 1 keeps everything and has no test set.
  double train_fraction = 1.0;
  std::uint64_t split_seed = 0;
  Standardize standardize = Standardize::none;
};

enum class SweepParameter { hidden, g0, alpha, sigma0 };

/// terminal: values at t = T. best: values at the iteration maximizing the
/// seed-averaged bound over full-batch evaluations.
enum class Selection { terminal, best };

struct SweepSpec {
  SweepParameter parameter = SweepParameter::hidden;
  std::vector<double> values;
  Selection selection = Selection::terminal;
};

struct ParticleSpec {
  std::size_t count = 1000;
  /// Clouds are produced for g0 = 0 and, when positive, for this threshold.
  double g0 = 1.0;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::train_curve;
  ModelSpec model;
  DataSpec data;
  RunConfig run;
  SweepSpec sweep;
  ParticleSpec particles;
  /// Independent runs with seed_init, seed_init + 1, ...
  std::size_t repeats = 1;
  std::size_t members = 10;
  unsigned threads = 1;
  /// Multiplies every oracle-check tolerance.
  double tolerance_scale = 1.0;
  std::string out_dir = "out";
};

/// Parses a JSON experiment description. Missing keys keep their defaults;
/// unknown keys are rejected. `overrides` are `dotted.key=value` assignments
/// applied before parsing; the value is read as JSON when it parses as JSON
/// and as a string otherwise. Relative file paths are resolved against
/// `base_dir`. Throws ConfigError.
ExperimentSpec parse_spec(std::string_view json_text, const std::vector<std::string>& overrides = {},
                          const std::filesystem::path& base_dir = {});

/// Reads a JSON config file, or the `config` header line of a curve file.
ExperimentSpec load_spec(const std::filesystem::path& path,
                         const std::vector<std::string>& overrides = {});

/// Complete, single-line JSON echo: parse_spec(to_json(s)) reproduces s.
std::string to_json(const ExperimentSpec& spec);

/// to_json without out_dir and threads, which never change results. This is
/// the echo written into output headers, so re-running it into a different
/// directory reproduces the files byte for byte.
std::string result_echo(const ExperimentSpec& spec);

/// Throws ConfigError when the spec is inconsistent (empty sweep grid, model
/// and data mismatch, particles on a non-2D objective, ...).
void validate(const ExperimentSpec& spec);

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(SweepParameter parameter);

}  // namespace sgdvi
