#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "sgdvi/dataset.hpp"

namespace sgdvi {

/// Layout of a delimited text file. Columns listed in `target_columns`
/// (0-based, negative values count from the end) become targets, the rest
/// become features. With `classification` set, exactly one target column is
/// allowed and it is read as an integer label.
struct DelimitedSchema {
  char delimiter = ',';
  bool has_header = false;
  std::vector<int> target_columns{-1};
  bool classification = false;
};

/// Throws ParseError naming the 1-based file line on ragged rows or
/// non-numeric cells.
Dataset load_delimited(const std::filesystem::path& path, const DelimitedSchema& schema);

/// Reads an MNIST-style IDX image/label pair. Pixels are scaled to [0, 1]
/// and the scaling is recorded in the normalization record. At most `limit`
/// examples are read.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t limit);

enum class SyntheticShape { linear, nonlinear };

/// Gaussian features, targets f(x) + noise. Weights are drawn from N(0, 1)
/// when not given. The nonlinear shape is y = sin(2 u) + 0.5 u with
/// u = x.w / |w|, which a small MLP can fit and a large one can overfit.
Dataset make_synthetic_regression(std::uint64_t seed, std::size_t n, std::size_t f,
                                  double noise_sigma,
                                  const std::optional<Vector>& true_weights = std::nullopt,
                                  SyntheticShape shape = SyntheticShape::linear);

enum class Standardize { none, features, features_and_targets };

/// Applies (x - mean) / scale using statistics of `reference`. Columns with
/// zero spread get scale 1. Composes with any normalization already recorded.
Dataset standardize_like(const Dataset& data, const Dataset& reference, Standardize mode);

/// Undoes every transform recorded in the normalization record.
Dataset denormalize(const Dataset& data);

/// Seeded shuffle into disjoint train/test parts of sizes round(fraction * N)
/// and the remainder; statistics for standardization come from train only.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed,
                                  Standardize mode = Standardize::none);

/// Row indices of the train part of split(data.size(), fraction, seed); exposed
/// for tests of the disjoint/exhaustive contract.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace sgdvi
