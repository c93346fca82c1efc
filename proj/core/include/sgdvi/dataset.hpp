#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sgdvi/types.hpp"

namespace sgdvi {

enum class TaskKind { regression, classification };

/// Per-column affine transform applied at ingestion: stored = (raw - mean) / scale.
/// Empty vectors mean the corresponding block was left untouched.
struct Normalization {
  Vector feature_mean;
  Vector feature_scale;
  Vector target_mean;
  Vector target_scale;

  bool features_normalized() const { return feature_scale.size() > 0; }
  bool targets_normalized() const { return target_scale.size() > 0; }
};

/// Immutable-after-construction table of examples. Features are N x F; regression
/// targets are N x O; classification uses `labels` in [0, num_classes).
struct Dataset {
  TaskKind task = TaskKind::regression;
  Matrix features;
  Matrix targets;
  std::vector<int> labels;
  int num_classes = 0;
  Normalization normalization;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t num_features() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t num_outputs() const {
    return task == TaskKind::classification ? static_cast<std::size_t>(num_classes)
                                            : static_cast<std::size_t>(targets.cols());
  }

  /// Rows selected by `rows`, in that order. Normalization record is copied.
  Dataset subset(std::span<const std::size_t> rows) const;
};

}  // namespace sgdvi
