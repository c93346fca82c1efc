#include "sgdvi/dataset.hpp"

#include "sgdvi/errors.hpp"

namespace sgdvi {

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.task = task;
  out.num_classes = num_classes;
  out.normalization = normalization;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.features.resize(n, features.cols());
  out.targets.resize(task == TaskKind::regression ? n : 0, targets.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = rows[static_cast<std::size_t>(i)];
    if (r >= size()) throw Error("Dataset::subset: row index out of range");
    out.features.row(i) = features.row(static_cast<Eigen::Index>(r));
    if (task == TaskKind::regression)
      out.targets.row(i) = targets.row(static_cast<Eigen::Index>(r));
    else
      out.labels.push_back(labels[r]);
  }
  return out;
}

}  // namespace sgdvi
