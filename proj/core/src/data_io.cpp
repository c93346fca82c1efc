#include "sgdvi/data_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>

#include "sgdvi/errors.hpp"

namespace sgdvi {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

double parse_cell(std::string_view cell, std::size_t line, std::size_t column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("non-numeric cell '" + std::string(cell) + "' in column " +
                         std::to_string(column + 1),
                     line);
  }
  return v;
}

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4))
    throw ParseError(what + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

struct ColumnStats {
  Vector mean;
  Vector scale;
};

ColumnStats column_stats(const Matrix& m) {
  ColumnStats s;
  const auto n = static_cast<double>(m.rows());
  s.mean = m.colwise().mean().transpose();
  s.scale.resize(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double var = (m.col(j).array() - s.mean[j]).square().sum() / n;
    s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

void apply_columns(Matrix& m, const Vector& mean, const Vector& scale) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    m.col(j) = (m.col(j).array() - mean[j]) / scale[j];
}

// Folds a second transform (mean2, scale2) into an existing record.
void compose(Vector& mean, Vector& scale, const Vector& mean2, const Vector& scale2) {
  if (scale.size() == 0) {
    mean = mean2;
    scale = scale2;
    return;
  }
  mean = mean.array() + mean2.array() * scale.array();
  scale = scale.array() * scale2.array();
}

}  // namespace

Dataset load_delimited(const std::filesystem::path& path, const DelimitedSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");

  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;
  std::size_t width = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && schema.has_header) continue;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line, schema.delimiter);
    if (rows.empty()) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw ParseError("ragged row: expected " + std::to_string(width) + " cells, got " +
                           std::to_string(cells.size()),
                       lineno);
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) row[c] = parse_cell(cells[c], lineno, c);
    rows.push_back(std::move(row));
    row_lines.push_back(lineno);
  }

  Dataset data;
  if (rows.empty()) return data;

  std::vector<bool> is_target(width, false);
  std::vector<std::size_t> target_cols;
  for (int c : schema.target_columns) {
    const long idx = c < 0 ? static_cast<long>(width) + c : c;
    if (idx < 0 || idx >= static_cast<long>(width))
      throw ParseError("target column " + std::to_string(c) + " out of range");
    if (!is_target[static_cast<std::size_t>(idx)]) target_cols.push_back(static_cast<std::size_t>(idx));
    is_target[static_cast<std::size_t>(idx)] = true;
  }
  if (schema.classification && target_cols.size() != 1)
    throw ParseError("classification schema needs exactly one target column");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto f = static_cast<Eigen::Index>(width - target_cols.size());
  data.features.resize(n, f);
  if (schema.classification) {
    data.task = TaskKind::classification;
    data.targets.resize(0, 0);
  } else {
    data.targets.resize(n, static_cast<Eigen::Index>(target_cols.size()));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    Eigen::Index fj = 0;
    for (std::size_t c = 0; c < width; ++c)
      if (!is_target[c]) data.features(i, fj++) = row[c];
    if (schema.classification) {
      const double v = row[target_cols[0]];
      if (v < 0 || v != std::floor(v))
        throw ParseError("label must be a non-negative integer", row_lines[static_cast<std::size_t>(i)]);
      data.labels.push_back(static_cast<int>(v));
    } else {
      for (std::size_t k = 0; k < target_cols.size(); ++k)
        data.targets(i, static_cast<Eigen::Index>(k)) = row[target_cols[k]];
    }
  }
  if (schema.classification)
    data.num_classes = *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  return data;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t limit) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw ParseError("cannot open image file '" + images_path.string() + "'");
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw ParseError("cannot open label file '" + labels_path.string() + "'");

  const std::string img_name = "image file '" + images_path.string() + "'";
  const std::string lbl_name = "label file '" + labels_path.string() + "'";
  if (read_be32(images, img_name) != 0x00000803u)
    throw ParseError(img_name + ": bad magic number (expected 0x00000803)");
  if (read_be32(labels, lbl_name) != 0x00000801u)
    throw ParseError(lbl_name + ": bad magic number (expected 0x00000801)");

  const std::uint32_t n_images = read_be32(images, img_name);
  const std::uint32_t height = read_be32(images, img_name);
  const std::uint32_t width = read_be32(images, img_name);
  const std::uint32_t n_labels = read_be32(labels, lbl_name);
  if (n_images != n_labels)
    throw ParseError("length mismatch: " + img_name + " has " + std::to_string(n_images) +
                     " items, " + lbl_name + " has " + std::to_string(n_labels));

  const std::size_t n = std::min<std::size_t>(limit, n_images);
  const std::size_t pixels = std::size_t{height} * width;

  Dataset data;
  data.task = TaskKind::classification;
  data.num_classes = 10;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pixels));
  data.labels.resize(n);

  std::vector<unsigned char> buf(pixels);
  for (std::size_t i = 0; i < n; ++i) {
    if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels)))
      throw ParseError(img_name + ": truncated pixel data at item " + std::to_string(i));
    for (std::size_t p = 0; p < pixels; ++p)
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = buf[p] / 255.0;
    char label = 0;
    if (!labels.get(label))
      throw ParseError(lbl_name + ": truncated label data at item " + std::to_string(i));
    const auto value = static_cast<unsigned char>(label);
    if (value > 9) throw ParseError(lbl_name + ": label out of range 0..9");
    data.labels[i] = value;
  }
  data.normalization.feature_mean = Vector::Zero(static_cast<Eigen::Index>(pixels));
  data.normalization.feature_scale = Vector::Constant(static_cast<Eigen::Index>(pixels), 255.0);
  return data;
}

Dataset make_synthetic_regression(std::uint64_t seed, std::size_t n, std::size_t f,
                                  double noise_sigma, const std::optional<Vector>& true_weights,
                                  SyntheticShape shape) {
  if (n < 1 || f < 1) throw ConfigError("synthetic regression needs N >= 1 and F >= 1");
  if (true_weights && static_cast<std::size_t>(true_weights->size()) != f)
    throw DimensionMismatch("synthetic regression weights", f, static_cast<std::size_t>(true_weights->size()));

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
  for (Eigen::Index i = 0; i < data.features.rows(); ++i)
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) data.features(i, j) = normal(rng);

  Vector w(static_cast<Eigen::Index>(f));
  if (true_weights) {
    w = *true_weights;
  } else {
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = normal(rng);
  }

  Vector y = data.features * w;
  if (shape == SyntheticShape::nonlinear) {
    const double norm = w.norm() > 0.0 ? w.norm() : 1.0;
    const Vector u = y / norm;
    y = (2.0 * u).array().sin() + 0.5 * u.array();
  }
  if (noise_sigma > 0.0)
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_sigma * normal(rng);
  data.targets = y;
  return data;
}

Dataset standardize_like(const Dataset& data, const Dataset& reference, Standardize mode) {
  Dataset out = data;
  if (mode == Standardize::none || reference.size() == 0) return out;
  const ColumnStats fs = column_stats(reference.features);
  apply_columns(out.features, fs.mean, fs.scale);
  compose(out.normalization.feature_mean, out.normalization.feature_scale, fs.mean, fs.scale);
  if (mode == Standardize::features_and_targets && data.task == TaskKind::regression) {
    const ColumnStats ts = column_stats(reference.targets);
    apply_columns(out.targets, ts.mean, ts.scale);
    compose(out.normalization.target_mean, out.normalization.target_scale, ts.mean, ts.scale);
  }
  return out;
}

Dataset denormalize(const Dataset& data) {
  Dataset out = data;
  const auto& nr = data.normalization;
  if (nr.features_normalized()) {
    for (Eigen::Index j = 0; j < out.features.cols(); ++j)
      out.features.col(j) = out.features.col(j).array() * nr.feature_scale[j] + nr.feature_mean[j];
  }
  if (nr.targets_normalized()) {
    for (Eigen::Index j = 0; j < out.targets.cols(); ++j)
      out.targets.col(j) = out.targets.col(j).array() * nr.target_scale[j] + nr.target_mean[j];
  }
  out.normalization = Normalization{};
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("split fraction must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n)
    throw ConfigError("degenerate split: " + std::to_string(n_train) + " of " +
                      std::to_string(n) + " rows in the train part");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed, Standardize mode) {
  const auto [train_rows, test_rows] = split_indices(data.size(), train_fraction, seed);
  Dataset train = data.subset(train_rows);
  Dataset test = data.subset(test_rows);
  Dataset train_std = standardize_like(train, train, mode);
  Dataset test_std = standardize_like(test, train, mode);
  return {std::move(train_std), std::move(test_std)};
}

}  // namespace sgdvi
